#include "infrafix/ir.hpp"

#include <stdexcept>

namespace infrafix {

std::string_view tech_name(Tech tech) {
  switch (tech) {
    case Tech::Ansible:
      return "ansible";
    case Tech::Puppet:
      return "puppet";
  }
  return "unknown";
}

std::optional<Tech> tech_from_name(std::string_view name) {
  if (name == "ansible") return Tech::Ansible;
  if (name == "puppet") return Tech::Puppet;
  return std::nullopt;
}

Expr Expr::string(std::string value, Span span, QuoteStyle quote) {
  Expr e;
  e.kind = ExprKind::String;
  e.text = std::move(value);
  e.span = span;
  e.quote = quote;
  return e;
}

Expr Expr::integer(std::int64_t value, std::string lexeme, Span span) {
  Expr e;
  e.kind = ExprKind::Int;
  e.int_value = value;
  e.text = std::move(lexeme);
  e.span = span;
  return e;
}

Expr Expr::boolean(bool value, std::string lexeme, Span span) {
  Expr e;
  e.kind = ExprKind::Bool;
  e.bool_value = value;
  e.text = std::move(lexeme);
  e.span = span;
  return e;
}

Expr Expr::null(Span span) {
  Expr e;
  e.kind = ExprKind::Null;
  e.span = span;
  return e;
}

Expr Expr::var(std::string name, Span span) {
  Expr e;
  e.kind = ExprKind::VarRef;
  e.text = std::move(name);
  e.span = span;
  return e;
}

Expr Expr::binary(ExprKind kind, Expr left, Expr right, Span span) {
  Expr e;
  e.kind = kind;
  e.span = span;
  e.operands.push_back(std::move(left));
  e.operands.push_back(std::move(right));
  return e;
}

std::string literal_rendering(const Expr& literal) {
  switch (literal.kind) {
    case ExprKind::String:
      return literal.text;
    case ExprKind::Int:
      return std::to_string(literal.int_value);
    case ExprKind::Bool:
      return literal.bool_value ? "true" : "false";
    case ExprKind::Null:
      return "";
    default:
      throw std::logic_error("literal_rendering on a non-literal node");
  }
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.text != b.text || a.int_value != b.int_value ||
      a.bool_value != b.bool_value || !(a.span == b.span) || a.quote != b.quote ||
      a.operands.size() != b.operands.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.operands.size(); ++i) {
    if (!structurally_equal(a.operands[i], b.operands[i])) return false;
  }
  return true;
}

const Attribute* Resource::find(std::string_view name) const {
  for (const auto& attr : attributes) {
    if (attr.name == name) return &attr;
  }
  return nullptr;
}

namespace {

void collect(const std::vector<Statement>& stmts, BranchPath& path,
             std::vector<ResourceRef>& out) {
  for (const auto& stmt : stmts) {
    if (const auto* res = std::get_if<Resource>(&stmt.node)) {
      out.push_back({res, path});
    } else if (const auto* cond = std::get_if<Conditional>(&stmt.node)) {
      path.emplace_back(cond->id, Branch::Then);
      collect(cond->then_branch, path, out);
      path.back().second = Branch::Else;
      collect(cond->else_branch, path, out);
      path.pop_back();
    }
  }
}

void visit_expr(const Expr& e, const Expr* parent,
                const std::function<void(const Expr&, const Expr*)>& fn) {
  fn(e, parent);
  for (const auto& op : e.operands) visit_expr(op, &e, fn);
}

void visit_stmts(const std::vector<Statement>& stmts,
                 const std::function<void(const Expr&, const Expr*)>& fn) {
  for (const auto& stmt : stmts) {
    if (const auto* res = std::get_if<Resource>(&stmt.node)) {
      visit_expr(res->title, nullptr, fn);
      for (const auto& attr : res->attributes) visit_expr(attr.value, nullptr, fn);
    } else if (const auto* assign = std::get_if<Assignment>(&stmt.node)) {
      visit_expr(assign->value, nullptr, fn);
    } else {
      const auto& cond = std::get<Conditional>(stmt.node);
      visit_expr(cond.condition, nullptr, fn);
      visit_stmts(cond.then_branch, fn);
      visit_stmts(cond.else_branch, fn);
    }
  }
}

void visit_expr_mut(Expr& e, const std::function<void(Expr&)>& fn) {
  fn(e);
  for (auto& op : e.operands) visit_expr_mut(op, fn);
}

void visit_stmts_mut(std::vector<Statement>& stmts, const std::function<void(Expr&)>& fn) {
  for (auto& stmt : stmts) {
    if (auto* res = std::get_if<Resource>(&stmt.node)) {
      visit_expr_mut(res->title, fn);
      for (auto& attr : res->attributes) visit_expr_mut(attr.value, fn);
    } else if (auto* assign = std::get_if<Assignment>(&stmt.node)) {
      visit_expr_mut(assign->value, fn);
    } else {
      auto& cond = std::get<Conditional>(stmt.node);
      visit_expr_mut(cond.condition, fn);
      visit_stmts_mut(cond.then_branch, fn);
      visit_stmts_mut(cond.else_branch, fn);
    }
  }
}

std::size_t count_in(const std::vector<Statement>& stmts) {
  std::size_t n = 0;
  for (const auto& stmt : stmts) {
    if (const auto* cond = std::get_if<Conditional>(&stmt.node)) {
      n += 1 + count_in(cond->then_branch) + count_in(cond->else_branch);
    }
  }
  return n;
}

}  // namespace

std::vector<ResourceRef> iter_resources(const IRScript& script) {
  std::vector<ResourceRef> out;
  BranchPath path;
  collect(script.statements, path, out);
  return out;
}

std::string span_text(const IRScript& script, const Span& span) {
  if (span.is_synthetic()) throw std::out_of_range("span_text: synthetic span");
  if (span.byte_start > span.byte_end || span.byte_end > script.source.size()) {
    throw std::out_of_range("span_text: span [" + std::to_string(span.byte_start) + ", " +
                            std::to_string(span.byte_end) + ") outside source of " +
                            std::to_string(script.source.size()) + " bytes");
  }
  return script.source.substr(span.byte_start, span.byte_end - span.byte_start);
}

void visit_exprs(const IRScript& script,
                 const std::function<void(const Expr&, const Expr*)>& fn) {
  visit_stmts(script.statements, fn);
}

void visit_exprs_mut(IRScript& script, const std::function<void(Expr&)>& fn) {
  visit_stmts_mut(script.statements, fn);
}

const Expr* find_expr(const IRScript& script, int id) {
  const Expr* found = nullptr;
  visit_exprs(script, [&](const Expr& e, const Expr*) {
    if (e.id == id) found = &e;
  });
  return found;
}

std::vector<const Expr*> literal_leaves(const Expr& root) {
  std::vector<const Expr*> out;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (e.is_literal()) {
      out.push_back(&e);
      return;
    }
    for (const auto& op : e.operands) walk(op);
  };
  walk(root);
  return out;
}

std::size_t count_conditionals(const IRScript& script) { return count_in(script.statements); }

}  // namespace infrafix
