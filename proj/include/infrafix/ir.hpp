#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace infrafix {

class NormalizationDb;

enum class Tech { Ansible, Puppet };

std::string_view tech_name(Tech tech);
std::optional<Tech> tech_from_name(std::string_view name);

// Source location of an IR node. Synthetic nodes (created by repair) carry the
// sentinel produced by Span::synthetic() and must never be used for splicing.
struct Span {
  static constexpr std::size_t kNoOffset = std::numeric_limits<std::size_t>::max();

  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;
  std::size_t byte_start = kNoOffset;
  std::size_t byte_end = kNoOffset;

  static Span synthetic() { return {}; }
  bool is_synthetic() const { return byte_start == kNoOffset; }
  std::size_t size() const { return byte_end - byte_start; }
  bool encloses(const Span& other) const {
    return byte_start <= other.byte_start && other.byte_end <= byte_end;
  }
  bool operator==(const Span&) const = default;
};

enum class ExprKind { String, Int, Bool, Null, VarRef, Concat, Sum, Equals, NotEquals };

enum class QuoteStyle { Plain, Single, Double };

struct Expr {
  ExprKind kind = ExprKind::Null;
  // String value, variable name, or the raw lexeme of an Int/Bool literal.
  std::string text;
  std::int64_t int_value = 0;
  bool bool_value = false;
  std::vector<Expr> operands;
  Span span;
  // Quoting of the token covered by `span`.
  QuoteStyle quote = QuoteStyle::Plain;
  // Set when the node sits inside a quoted host string (an interpolation
  // fragment or a literal inside an Ansible `when:` scalar); replacement text
  // must then be escaped for `host_quote`.
  bool embedded = false;
  QuoteStyle host_quote = QuoteStyle::Plain;
  int id = -1;
  bool synthetic = false;

  static Expr string(std::string value, Span span = Span::synthetic(),
                     QuoteStyle quote = QuoteStyle::Plain);
  static Expr integer(std::int64_t value, std::string lexeme, Span span = Span::synthetic());
  static Expr boolean(bool value, std::string lexeme, Span span = Span::synthetic());
  static Expr null(Span span = Span::synthetic());
  static Expr var(std::string name, Span span = Span::synthetic());
  static Expr binary(ExprKind kind, Expr left, Expr right, Span span);

  bool is_literal() const {
    return kind == ExprKind::String || kind == ExprKind::Int || kind == ExprKind::Bool ||
           kind == ExprKind::Null;
  }
  bool is_binary() const { return operands.size() == 2; }
  const Expr& lhs() const { return operands[0]; }
  const Expr& rhs() const { return operands[1]; }
};

// Canonical string rendering of a literal: strings verbatim, integers in
// decimal, booleans as "true"/"false", null as "".
std::string literal_rendering(const Expr& literal);

bool structurally_equal(const Expr& a, const Expr& b);

struct Attribute {
  std::string name;
  Expr value;
  Span name_span;
  bool synthetic = false;
};

// Where a frontend would place a new attribute inside a resource body.
struct AttributeSlot {
  std::size_t insert_at = Span::kNoOffset;
  std::string indent;        // leading whitespace of a new attribute line
  bool flow = false;         // YAML flow mapping: insert ", key: value"
  bool needs_comma = false;  // Puppet: the last attribute has no trailing comma
};

struct Resource {
  std::string type;
  Span type_span;
  // Puppet titles are expressions; Ansible tasks carry a null title and are
  // identified through their identifying attribute.
  Expr title;
  std::vector<Attribute> attributes;
  Span span;
  int index = -1;  // pre-order ordinal among all resources of the script
  AttributeSlot slot;

  const Attribute* find(std::string_view name) const;
};

struct Statement;

struct Assignment {
  std::string name;
  Expr value;
  Span span;
};

enum class Branch { Then, Else };

struct Conditional {
  int id = -1;  // pre-order ordinal among all conditionals of the script
  Expr condition;
  std::vector<Statement> then_branch;
  std::vector<Statement> else_branch;
  Span span;
};

struct Statement {
  std::variant<Resource, Assignment, Conditional> node;
};

// Where new top-level resources are appended.
struct ResourceSlot {
  std::size_t insert_at = Span::kNoOffset;
  std::string indent;  // Ansible: indentation of the task list dashes
  bool available = true;
};

struct IRScript {
  Tech tech = Tech::Puppet;
  std::vector<Statement> statements;
  std::string source;
  ResourceSlot resource_slot;
  int indent_unit = 2;
  int next_expr_id = 0;
  // Set by normalize_script; carries the value rules applied at evaluation.
  std::shared_ptr<const NormalizationDb> db;
  bool normalized = false;
};

using BranchPath = std::vector<std::pair<int, Branch>>;

struct ResourceRef {
  const Resource* resource;
  BranchPath branch_path;
};

// Every resource in source order with the conditional decisions guarding it.
std::vector<ResourceRef> iter_resources(const IRScript& script);

// Exact source slice covered by `span`; throws std::out_of_range.
std::string span_text(const IRScript& script, const Span& span);

// Visits every expression node (titles, attribute values, assignment values,
// conditions) depth-first, parents before children. `parent` is null for roots.
void visit_exprs(const IRScript& script,
                 const std::function<void(const Expr& node, const Expr* parent)>& fn);

void visit_exprs_mut(IRScript& script, const std::function<void(Expr& node)>& fn);

const Expr* find_expr(const IRScript& script, int id);

// Literal leaves under `root`, left to right.
std::vector<const Expr*> literal_leaves(const Expr& root);

std::size_t count_conditionals(const IRScript& script);

}  // namespace infrafix
