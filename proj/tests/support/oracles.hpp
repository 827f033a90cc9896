#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "infrafix/ir.hpp"
#include "infrafix/normalize.hpp"
#include "infrafix/repair.hpp"
#include "infrafix/state.hpp"

namespace oracle {

using infrafix::IRScript;
using infrafix::SystemState;

std::shared_ptr<const infrafix::NormalizationDb> db();

// Parses and normalizes with the bundled database.
IRScript load(infrafix::Tech tech, const std::string& source);

// Reference interpreter: runs the script once per branch-decision vector over
// all conditionals and collects the distinct final states. Shares nothing with
// the library evaluator but the IR and the normalization database.
std::set<std::string> brute_force_states(const IRScript& normalized);
std::set<std::string> library_states(const IRScript& normalized);

// Random Puppet manifest with at most `max_conditionals` conditionals whose
// resource identifiers are always known.
std::string random_puppet(std::mt19937_64& rng, int max_conditionals);
// Random Ansible task list with `when:` guards and set_fact assignments.
std::string random_ansible(std::mt19937_64& rng, int max_conditionals);

struct MinimalityCase {
  std::string source;
  SystemState desired;
};

// Small Puppet instance plus a desired state derived from one of its states.
MinimalityCase random_minimality_case(std::mt19937_64& rng);

// Existing edit sites as the oracle counts them.
std::size_t existing_site_count(const IRScript& normalized);

// Minimal total cost of any edit set of cost < `below` that makes some state
// satisfy `desired`, or -1 when none exists. Edits: replace an attribute value
// or any literal leaf of an attribute, assignment or condition; add a missing
// attribute (cost 1); add a missing resource with all desired attributes
// (cost 1 + attributes).
int brute_force_min_cost(const IRScript& normalized, const SystemState& desired, int below);

// Applies a solution with the oracle's own IR editor and checks the result.
bool witness_holds(const IRScript& normalized, const infrafix::RepairSolution& solution,
                   const SystemState& desired);

}  // namespace oracle
