#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "infrafix/repair.hpp"
#include "oracles.hpp"

using namespace infrafix;

namespace {

std::string read_file(const std::string& rel) {
  std::ifstream in(std::string(INFRAFIX_SOURCE_DIR) + "/" + rel);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

SystemState one(const std::string& id, std::map<std::string, std::string> attrs) {
  return SystemState{{{id, std::move(attrs)}}};
}

}  // namespace

TEST(Repair, ZeroEditWhenAlreadySatisfied) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  auto r = repair(s, one("file:/a", {{"state", "present"}}));
  ASSERT_EQ(r.solutions.size(), 1u);
  EXPECT_TRUE(r.solutions[0].edits.empty());
  EXPECT_EQ(r.solutions[0].total_cost, 0);
  EXPECT_TRUE(r.failure_class.empty());
}

TEST(Repair, PuppetEnsureToAbsent) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  SystemState desired = one("file:/a", {{"state", "absent"}});
  auto r = repair(s, desired);
  ASSERT_FALSE(r.solutions.empty());
  const auto& best = r.solutions[0];
  EXPECT_EQ(best.total_cost, 1);
  ASSERT_EQ(best.edits.size(), 1u);
  EXPECT_EQ(best.edits[0].site.kind, SiteKind::AttributeValue);
  EXPECT_EQ(best.edits[0].new_value, "absent");
  EXPECT_EQ(best.edits[0].raw_value, "absent");
  // Nothing cheaper exists and the single cost-1 repair is the only one.
  EXPECT_EQ(oracle::brute_force_min_cost(s, desired, 1), -1);
  EXPECT_EQ(oracle::brute_force_min_cost(s, desired, 2), 1);
  std::size_t cost_one = 0;
  for (const auto& sol : r.solutions) cost_one += sol.total_cost == 1;
  EXPECT_EQ(cost_one, 1u);
  EXPECT_TRUE(oracle::witness_holds(s, best, desired));
}

TEST(Repair, SteamNeedsTwoInsertions) {
  auto s = oracle::load(Tech::Ansible, read_file("data/steam/steam.yml"));
  SystemState desired = parse_state(read_file("data/steam/desired.json"));
  auto r = repair(s, desired);
  ASSERT_FALSE(r.solutions.empty());
  const auto& best = r.solutions[0];
  EXPECT_EQ(best.total_cost, 4);  // two resources, one attribute each
  std::set<std::string> inserted;
  for (const auto& e : best.edits) {
    if (e.site.kind == SiteKind::MissingResource) inserted.insert(e.site.resource_id);
  }
  EXPECT_EQ(inserted, (std::set<std::string>{"package:libgl1-mesa-dri:i386", "package:libgl1:i386"}));
  EXPECT_TRUE(verify_solution(s, best, desired));
  EXPECT_TRUE(oracle::witness_holds(s, best, desired));
}

TEST(Repair, SolutionsAscendByCost) {
  auto s = oracle::load(Tech::Puppet,
                        "$m = '0644'\nfile { '/a': mode => $m }\nif $x == 'y' { file { '/b': mode => '0600' } }\n");
  auto r = repair(s, one("file:/a", {{"mode", "0640"}}));
  ASSERT_GE(r.solutions.size(), 2u);
  for (std::size_t i = 1; i < r.solutions.size(); ++i) {
    EXPECT_LE(r.solutions[i - 1].total_cost, r.solutions[i].total_cost);
  }
  for (const auto& sol : r.solutions) {
    int sum = 0;
    for (const auto& e : sol.edits) sum += e.cost;
    EXPECT_EQ(sum, sol.total_cost);
  }
}

TEST(Sites, Counts) {
  auto s = oracle::load(Tech::Puppet,
                        "$m = '0644'\n"
                        "if $os == 'Debian' { file { '/a': ensure => file, mode => $m } }\n"
                        "package { 'p': ensure => installed }\n");
  std::map<SiteKind, int> counts;
  for (const auto& site : collect_sites(s)) counts[site.kind]++;
  EXPECT_EQ(counts[SiteKind::VariableLiteral], 1);
  EXPECT_EQ(counts[SiteKind::ConditionLiteral], 1);  // 'Debian'
  EXPECT_GE(counts[SiteKind::AttributeValue], 3);
  EXPECT_EQ(counts[SiteKind::MissingResource], 0);
  EXPECT_GE(counts[SiteKind::MissingAttribute], 1);
  for (const auto& site : collect_sites(s)) {
    EXPECT_EQ(site.existing(), site.kind != SiteKind::MissingAttribute);
  }
}

TEST(FailureClass, UndefinedVariable) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': owner => $who }\n");
  RepairConfig cfg;
  cfg.allow_expression_replacement = false;
  auto r = repair(s, one("file:/a", {{"owner", "root"}}), cfg);
  EXPECT_TRUE(r.solutions.empty());
  EXPECT_EQ(r.failure_class, "undefined-variable");
  EXPECT_FALSE(r.failure_detail.empty());
  // With replacement allowed the variable reference becomes a literal.
  auto ok = repair(s, one("file:/a", {{"owner", "root"}}));
  ASSERT_FALSE(ok.solutions.empty());
  EXPECT_EQ(ok.solutions[0].total_cost, 1);
}

TEST(FailureClass, MissingResource) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  RepairConfig cfg;
  cfg.allow_resource_insertion = false;
  auto r = repair(s, one("package:steam", {{"state", "present"}}), cfg);
  EXPECT_TRUE(r.solutions.empty());
  EXPECT_EQ(r.failure_class, "missing-resource");
}

TEST(FailureClass, SharedVariableConflict) {
  auto s = oracle::load(Tech::Puppet, "$m = '0644'\nfile { '/a': mode => $m }\nfile { '/b': mode => $m }\n");
  RepairConfig cfg;
  cfg.allow_expression_replacement = false;
  SystemState desired{{{"file:/a", {{"mode", "0600"}}}, {"file:/b", {{"mode", "0640"}}}}};
  auto r = repair(s, desired, cfg);
  EXPECT_TRUE(r.solutions.empty());
  EXPECT_EQ(r.failure_class, "shared-variable-conflict");
}

TEST(FailureClass, CostBound) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  RepairConfig cfg;
  cfg.max_cost = 1;
  auto r = repair(s, one("file:/a", {{"state", "absent"}, {"mode", "0600"}, {"owner", "root"}}), cfg);
  EXPECT_TRUE(r.solutions.empty());
  EXPECT_EQ(r.failure_class, "cost-bound");
}

// Every attribute reading a shared variable sees the edited value, so a
// variable edit is only proposed when all of its readers agree.
TEST(Repair, SharedVariableCoherence) {
  auto s = oracle::load(Tech::Puppet, "$m = '0644'\nfile { '/a': mode => $m }\nfile { '/b': mode => $m }\n");
  SystemState desired{{{"file:/a", {{"mode", "0600"}}}, {"file:/b", {{"mode", "0600"}}}}};
  auto r = repair(s, desired);
  ASSERT_FALSE(r.solutions.empty());
  EXPECT_EQ(r.solutions[0].total_cost, 1);
  EXPECT_EQ(r.solutions[0].edits[0].site.kind, SiteKind::VariableLiteral);
  for (const auto& sol : r.solutions) {
    EXPECT_TRUE(verify_solution(s, sol, desired));
    EXPECT_TRUE(oracle::witness_holds(s, sol, desired));
  }
  // Desired values that differ force per-attribute edits instead.
  SystemState split{{{"file:/a", {{"mode", "0600"}}}, {"file:/b", {{"mode", "0644"}}}}};
  auto r2 = repair(s, split);
  ASSERT_FALSE(r2.solutions.empty());
  for (const auto& e : r2.solutions[0].edits) EXPECT_NE(e.site.kind, SiteKind::VariableLiteral);
  EXPECT_TRUE(oracle::witness_holds(s, r2.solutions[0], split));
}

TEST(Repair, ConditionEditSelectsBranch) {
  auto s = oracle::load(Tech::Puppet,
                        "$os = 'RedHat'\nif $os == 'Debian' { package { 'apache2': ensure => installed } }\n"
                        "else { package { 'httpd': ensure => installed } }\n");
  SystemState desired = one("package:apache2", {{"state", "present"}});
  auto r = repair(s, desired);
  ASSERT_FALSE(r.solutions.empty());
  EXPECT_EQ(r.solutions[0].total_cost, 1);
  EXPECT_EQ(oracle::brute_force_min_cost(s, desired, 1), -1);
  for (const auto& sol : r.solutions) EXPECT_TRUE(oracle::witness_holds(s, sol, desired));
}

TEST(Repair, Deterministic) {
  auto s = oracle::load(Tech::Puppet, read_file("corpus/puppet/apache.pp"));
  auto states = infer_states(s);
  SystemState desired = states.front().state;
  ASSERT_FALSE(desired.resources.empty());
  desired.resources[0].attributes.begin()->second = "changed";
  auto a = repair(s, desired);
  auto b = repair(s, desired);
  ASSERT_EQ(a.solutions.size(), b.solutions.size());
  for (std::size_t i = 0; i < a.solutions.size(); ++i) {
    ASSERT_EQ(a.solutions[i].edits.size(), b.solutions[i].edits.size());
    for (std::size_t k = 0; k < a.solutions[i].edits.size(); ++k) {
      EXPECT_EQ(a.solutions[i].edits[k].site.expr_id, b.solutions[i].edits[k].site.expr_id);
      EXPECT_EQ(a.solutions[i].edits[k].raw_value, b.solutions[i].edits[k].raw_value);
    }
  }
}

TEST(Verify, WrongEditIsRejected) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  SystemState desired = one("file:/a", {{"state", "absent"}});
  auto r = repair(s, desired);
  ASSERT_FALSE(r.solutions.empty());
  RepairSolution wrong = r.solutions[0];
  wrong.edits[0].new_value = "directory";
  wrong.edits[0].raw_value = "directory";
  EXPECT_FALSE(verify_solution(s, wrong, desired));
  EXPECT_FALSE(oracle::witness_holds(s, wrong, desired));
}

TEST(Config, Validation) {
  auto s = oracle::load(Tech::Puppet, "file { '/a': ensure => file }\n");
  SystemState desired = one("file:/a", {{"state", "absent"}});
  RepairConfig zero;
  zero.max_solutions = 0;
  EXPECT_THROW(repair(s, desired, zero), EngineError);
  RepairConfig neg;
  neg.max_cost = -1;
  EXPECT_THROW(repair(s, desired, neg), EngineError);
  RepairConfig t;
  t.timeout_seconds = -1;
  EXPECT_THROW(repair(s, desired, t), EngineError);
  // Unnormalized input is rejected.
  EXPECT_THROW(repair(parse_puppet("file { '/a': ensure => file }\n"), desired), EngineError);
}

TEST(Config, MaxSolutionsCaps) {
  auto s = oracle::load(Tech::Puppet, "$m = '0644'\nfile { '/a': mode => $m }\n");
  RepairConfig cfg;
  cfg.max_solutions = 1;
  auto r = repair(s, one("file:/a", {{"mode", "0600"}}), cfg);
  EXPECT_EQ(r.solutions.size(), 1u);
}

TEST(Repair, UnknownIdentifierPropagates) {
  auto s = oracle::load(Tech::Puppet, "file { $where: ensure => file }\n");
  EXPECT_THROW(repair(s, one("file:/a", {{"state", "absent"}})), InferenceError);
}
