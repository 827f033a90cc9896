#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "infrafix/infer.hpp"
#include "infrafix/ir.hpp"
#include "infrafix/state.hpp"

namespace infrafix {

enum class SiteKind { AttributeValue, VariableLiteral, ConditionLiteral, MissingAttribute, MissingResource };

std::string_view site_kind_name(SiteKind kind);

struct EditSite {
  SiteKind kind = SiteKind::AttributeValue;
  std::string type;          // canonical type of the resource involved
  std::string resource_id;   // AttributeValue, MissingAttribute, MissingResource
  std::string attribute;     // AttributeValue, MissingAttribute (canonical name)
  std::string variable;      // VariableLiteral
  int conditional = -1;      // ConditionLiteral
  int expr_id = -1;          // existing-expression kinds
  int resource_index = -1;   // declaration receiving a MissingAttribute; -1 = inserted resource
  Span span;                 // synthetic for Missing* kinds

  bool existing() const { return kind != SiteKind::MissingAttribute && kind != SiteKind::MissingResource; }
};

struct Edit {
  EditSite site;
  // Canonical value the site must produce. For sub-expression edits this is
  // the literal text itself; normalization only applies to whole values.
  std::string new_value;
  // Technology-specific value written into the script (denormalized).
  std::string raw_value;
  int cost = 1;
};

struct RepairSolution {
  std::vector<Edit> edits;
  int total_cost = 0;
  BranchPath branch_decisions;  // decisions of the patched script's satisfying state
};

struct RepairConfig {
  std::size_t max_solutions = 10;
  double timeout_seconds = 120.0;
  int max_cost = 8;
  bool allow_resource_insertion = true;
  // Whole-expression replacement of non-literal expressions; without it an
  // attribute fed by an undefined variable cannot be repaired.
  bool allow_expression_replacement = true;
  std::size_t branch_cap = kDefaultBranchCap;
};

struct RepairResult {
  std::vector<RepairSolution> solutions;  // ascending cost, then source order
  bool timed_out = false;
  // Why nothing was found: undefined-variable, shared-variable-conflict,
  // missing-resource, cost-bound or no-candidate. Empty on success.
  std::string failure_class;
  std::string failure_detail;
};

// Every place the engine may edit. MissingResource sites are not listed; they
// come from the desired state at repair time.
std::vector<EditSite> collect_sites(const IRScript& script);

// Throws InferenceError or CapacityError when the original script cannot be
// evaluated and EngineError on internal inconsistency.
RepairResult repair(const IRScript& script, const SystemState& desired, const RepairConfig& cfg = {});

// Applies edits to a normalized script in memory (values as the patched text
// would read them).
IRScript apply_edits(const IRScript& script, const std::vector<Edit>& edits);

// True iff some state of the patched script satisfies `desired`.
bool verify_solution(const IRScript& script, const RepairSolution& solution, const SystemState& desired,
                     std::size_t branch_cap = kDefaultBranchCap);

}  // namespace infrafix
