#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "infrafix/harness.hpp"
#include "oracles.hpp"

using namespace infrafix;
namespace fs = std::filesystem;

namespace {

const fs::path kCorpus = fs::path(INFRAFIX_SOURCE_DIR) / "corpus";

Scenario scenario_for(Tech tech, const std::string& path, SystemState desired) {
  Scenario s;
  s.tech = tech;
  s.script_path = path;
  s.benchmark = "test";
  s.desired = std::move(desired);
  return s;
}

ScenarioOutcome run(Tech tech, const std::string& src, const SystemState& desired, RepairConfig cfg = {},
                    const RepairFn& fn = {}) {
  return run_scenario(scenario_for(tech, "inline", desired), parse_script(tech, src), oracle::db(), cfg, fn);
}

// A manifest with 6 unknown conditionals (64 paths) over many resources.
std::string pathological() {
  std::string src;
  for (int c = 0; c < 6; ++c) {
    src += "if $fact" + std::to_string(c) + " == 'on' {\n";
    for (int r = 0; r < 25; ++r) {
      src += "  file { '/c" + std::to_string(c) + "/f" + std::to_string(r) + "': ensure => file, mode => '0644' }\n";
    }
    src += "}\n";
  }
  return src;
}

class TempCorpus : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("infrafix-corpus-" + std::to_string(::getpid()) + "-" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }
  void put(const std::string& rel, const std::string& text) {
    fs::create_directories((root_ / rel).parent_path());
    std::ofstream(root_ / rel) << text;
  }
  fs::path root_;
};

}  // namespace

TEST(Pools, NeverContainCurrentAndAreNonEmpty) {
  MutationConfig cfg;
  EXPECT_EQ(cfg.pool("file", "state", "present"), (std::vector<std::string>{"absent", "directory", "link"}));
  EXPECT_EQ(cfg.pool("file", "mode", "0644"), (std::vector<std::string>{"0600", "0755", "0700"}));
  EXPECT_EQ(cfg.pool("file", "owner", "root"), (std::vector<std::string>{"daemon", "www-data"}));
  EXPECT_EQ(cfg.pool("package", "version", "1.0.0"), (std::vector<std::string>{"2.0.0"}));
  for (const auto& s : cfg.pool("file", "target", "/etc/x")) {
    EXPECT_NE(s, "/etc/x");
    EXPECT_EQ(s.rfind("/etc/x", 0), 0u) << s;  // suffixes of the original
  }
  EXPECT_FALSE(cfg.pool("file", "target", "/etc/x").empty());
  for (const auto& [key, values] : cfg.value_pools) EXPECT_FALSE(values.empty()) << key;
}

// k=1 on {state=present, mode=0644}: every scenario flips one of the two to a
// pool value, and over enough draws all of them appear.
TEST(Generate, SingleMutationEnumeratesPoolMinusCurrent) {
  auto script = oracle::load(Tech::Puppet, "file { '/a': ensure => file, mode => '0644' }\n");
  MutationConfig cfg;
  cfg.min_mutations = cfg.max_mutations = 1;
  cfg.scenarios_per_state = 200;
  auto scenarios = generate_scenarios(script, cfg);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : scenarios) {
    ASSERT_EQ(s.mutations.size(), 1u);
    seen.emplace(s.mutations[0].attribute, s.mutations[0].to);
  }
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& v : cfg.pool("file", "state", "present")) expected.emplace("state", v);
  for (const auto& v : cfg.pool("file", "mode", "0644")) expected.emplace("mode", v);
  EXPECT_EQ(seen, expected);
  EXPECT_EQ(scenarios.size(), expected.size());  // duplicates dropped
}

TEST(Generate, BothInferredStatesUsed) {
  auto script = oracle::load(Tech::Puppet,
                             "if $os == 'Debian' { package { 'apache2': ensure => installed } }\n"
                             "else { package { 'httpd': ensure => installed } }\n");
  auto scenarios = generate_scenarios(script, MutationConfig{});
  std::set<std::size_t> indices;
  for (const auto& s : scenarios) indices.insert(s.state_index);
  EXPECT_EQ(indices, (std::set<std::size_t>{0, 1}));
}

TEST(Generate, OnlyUnsupportedTypesSkip) {
  auto script = oracle::load(Tech::Puppet, "cron { 'backup': command => '/bin/true' }\n");
  EXPECT_THROW(generate_scenarios(script, MutationConfig{}), GenerationSkip);
  EXPECT_THROW(generate_scenarios(oracle::load(Tech::Ansible, ""), MutationConfig{}), GenerationSkip);
  // Only unknown attribute values: nothing to mutate either.
  EXPECT_THROW(generate_scenarios(oracle::load(Tech::Puppet, "file { '/a': owner => $who }\n"), MutationConfig{}),
               GenerationSkip);
}

TEST(Generate, SeedDeterminism) {
  const std::string src = read_text_file(kCorpus / "puppet" / "apache.pp");
  auto script = oracle::load(Tech::Puppet, src);
  MutationConfig a;
  auto first = generate_scenarios(script, a, "x");
  auto second = generate_scenarios(script, a, "x");
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].desired, second[i].desired);
  MutationConfig b;
  b.seed = 7;
  auto other = generate_scenarios(script, b, "x");
  bool differs = other.size() != first.size();
  for (std::size_t i = 0; !differs && i < first.size(); ++i) differs = !(other[i].desired == first[i].desired);
  EXPECT_TRUE(differs);
}

TEST(Generate, ValidityOverCorpus) {
  MutationConfig cfg;
  auto db = oracle::db();
  for (const auto& f : corpus_files(kCorpus)) {
    std::vector<Scenario> scenarios;
    try {
      scenarios = file_scenarios(kCorpus, f, db, cfg);
    } catch (const GenerationSkip&) {
      continue;
    }
    auto states = infer_states(oracle::load(*detect_tech(f), read_text_file(f)));
    std::set<std::string> desired_seen;
    for (const auto& s : scenarios) {
      EXPECT_TRUE(desired_seen.insert(serialize_state(s.desired)).second) << f;
      ASSERT_GE(s.mutations.size(), static_cast<std::size_t>(cfg.min_mutations));
      ASSERT_LE(s.mutations.size(), static_cast<std::size_t>(cfg.max_mutations));
      std::set<std::pair<std::string, std::string>> targets;
      for (const auto& m : s.mutations) {
        EXPECT_TRUE(targets.emplace(m.resource_id, m.attribute).second) << "repeated target in " << f;
        EXPECT_NE(m.from, m.to);
        EXPECT_NE(m.from, kUnknownValue);
        const std::string type = m.resource_id.substr(0, m.resource_id.find(':'));
        auto pool = cfg.pool(type, m.attribute, m.from);
        EXPECT_NE(std::find(pool.begin(), pool.end(), m.to), pool.end()) << m.resource_id << "." << m.attribute;
      }
      for (const auto& st : states) EXPECT_FALSE(satisfies(st.state, s.desired)) << f;
      for (const auto& r : s.desired.resources) {
        EXPECT_FALSE(r.attributes.empty());
        for (const auto& [k, v] : r.attributes) EXPECT_NE(v, kUnknownValue);
      }
    }
  }
}

TEST(RunScenario, LiteralEditPasses) {
  auto o = run(Tech::Puppet, "file { '/a': ensure => file, mode => '0644' }\n",
               SystemState{{{"file:/a", {{"state", "present"}, {"mode", "0600"}}}}});
  EXPECT_EQ(o.status, ScenarioStatus::Passed);
  EXPECT_EQ(o.best_cost, 1);
  EXPECT_GE(o.solutions_found, 1u);
  EXPECT_TRUE(o.soundness.clean()) << o.soundness.first_problem;
  EXPECT_GE(o.wall_time, 0.0);
}

TEST(RunScenario, UndefinedVariableWithoutReplacementFails) {
  RepairConfig cfg;
  cfg.allow_expression_replacement = false;
  auto o = run(Tech::Puppet, "file { '/a': owner => $who }\n", SystemState{{{"file:/a", {{"owner", "root"}}}}}, cfg);
  EXPECT_EQ(o.status, ScenarioStatus::Failed);
  EXPECT_EQ(o.failure_class, "undefined-variable");
  EXPECT_EQ(o.solutions_found, 0u);
}

TEST(RunScenario, NoInsertionFails) {
  RepairConfig cfg;
  cfg.allow_resource_insertion = false;
  auto o = run(Tech::Ansible, "- package: {name: steam, state: present}\n",
               SystemState{{{"package:other", {{"state", "present"}}}}}, cfg);
  EXPECT_EQ(o.status, ScenarioStatus::Failed);
  EXPECT_EQ(o.failure_class, "missing-resource");
}

TEST(RunScenario, TinyDeadlineTimesOut) {
  RepairConfig cfg;
  cfg.timeout_seconds = 0.001;
  SystemState desired;
  for (int c = 0; c < 6; ++c) {
    desired.resources.push_back({"file:/c" + std::to_string(c) + "/f24", {{"mode", "0600"}}});
  }
  desired.resources.push_back({"file:/fresh", {{"state", "present"}, {"mode", "0600"}, {"owner", "root"}}});
  auto o = run(Tech::Puppet, pathological(), desired, cfg);
  EXPECT_EQ(o.status, ScenarioStatus::Timeout);
  EXPECT_EQ(o.solutions_found, 0u);
}

TEST(RunScenario, EngineExceptionIsError) {
  RepairFn boom = [](const IRScript&, const SystemState&, const RepairConfig&) -> RepairResult {
    throw EngineError("injected fault");
  };
  auto o = run(Tech::Puppet, "file { '/a': ensure => file }\n", SystemState{{{"file:/a", {{"state", "absent"}}}}}, {},
               boom);
  EXPECT_EQ(o.status, ScenarioStatus::Error);
  EXPECT_EQ(o.failure_class, "engine-fault");
  EXPECT_NE(o.detail.find("injected fault"), std::string::npos);
}

TEST(RunScenario, BranchCapIsError) {
  RepairConfig cfg;
  cfg.branch_cap = 4;
  auto o = run(Tech::Puppet, pathological(), SystemState{{{"file:/c0/f0", {{"mode", "0600"}}}}}, cfg);
  EXPECT_EQ(o.status, ScenarioStatus::Error);
  EXPECT_EQ(o.failure_class, "branch-cap");
}

// A solution the engine claims but that does not verify must not pass.
TEST(RunScenario, UnverifiedSolutionFails) {
  RepairFn liar = [](const IRScript&, const SystemState&, const RepairConfig&) {
    RepairResult r;
    r.solutions.emplace_back();
    return r;
  };
  auto o = run(Tech::Puppet, "file { '/a': ensure => file }\n", SystemState{{{"file:/a", {{"state", "absent"}}}}}, {},
               liar);
  EXPECT_EQ(o.status, ScenarioStatus::Failed);
  EXPECT_EQ(o.failure_class, "unverified");
  EXPECT_GT(o.soundness.verify_failures, 0u);
}

TEST(RunScenario, FromFile) {
  auto scenarios = file_scenarios(kCorpus, kCorpus / "puppet" / "ntp.pp", oracle::db(), MutationConfig{});
  ASSERT_FALSE(scenarios.empty());
  auto o = run_scenario(scenarios.front(), RepairConfig{});
  EXPECT_EQ(o.status, ScenarioStatus::Passed);
  Scenario missing = scenarios.front();
  missing.script_path = "/nonexistent/file.pp";
  EXPECT_EQ(run_scenario(missing, RepairConfig{}).status, ScenarioStatus::Error);
}

TEST(Suite, ParallelMatchesSerialAndWorkerCountDoesNotMatter) {
  MutationConfig m;
  m.scenarios_per_state = 5;
  RepairConfig r;
  auto serial = run_suite_serial(kCorpus, m, r);
  auto one = run_suite(kCorpus, m, r, 1);
  auto eight = run_suite(kCorpus, m, r, 8);
  EXPECT_EQ(serial.benchmarks, one.benchmarks);
  EXPECT_EQ(one.benchmarks, eight.benchmarks);
  EXPECT_EQ(one.techs, eight.techs);
  EXPECT_EQ(one.overall, eight.overall);
  ASSERT_EQ(serial.records.size(), eight.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    EXPECT_EQ(serial.records[i].scenario.desired, eight.records[i].scenario.desired);
    EXPECT_EQ(serial.records[i].outcome.status, eight.records[i].outcome.status);
    EXPECT_EQ(serial.records[i].outcome.best_cost, eight.records[i].outcome.best_cost);
  }
}

TEST(Suite, CountsAndPercentages) {
  MutationConfig m;
  m.scenarios_per_state = 5;
  auto rep = run_suite(kCorpus, m, RepairConfig{}, 2);
  EXPECT_EQ(rep.files, corpus_files(kCorpus).size());
  std::size_t sum = 0;
  for (const auto& b : rep.benchmarks) {
    EXPECT_EQ(b.passed + b.failed + b.error + b.timeout, b.total) << b.name;
    const double pct = b.percent(b.passed) + b.percent(b.failed) + b.percent(b.error) + b.percent(b.timeout);
    EXPECT_NEAR(pct, 100.0, 1e-9) << b.name;
    sum += b.total;
  }
  EXPECT_EQ(sum, rep.overall.total);
  EXPECT_EQ(rep.records.size(), rep.overall.total);
  auto j = report_to_json(rep);
  EXPECT_EQ(j["total"]["total"], rep.overall.total);
  EXPECT_EQ(j["scenarios"].size(), rep.records.size());
  const std::string table = report_table(rep);
  EXPECT_NE(table.find("Benchmark"), std::string::npos);
  EXPECT_NE(table.find("tortoise"), std::string::npos);
}

TEST(Suite, FixtureBenchmarkPassesAtLeast90Percent) {
  auto rep = run_suite(kCorpus / "tortoise", MutationConfig{}, RepairConfig{}, 2);
  ASSERT_GT(rep.overall.total, 0u);
  EXPECT_EQ(rep.files, 13u);
  EXPECT_GE(rep.overall.percent(rep.overall.passed), 90.0);
}

TEST_F(TempCorpus, EmptyCorpusGivesEmptyReport) {
  auto rep = run_suite(root_, MutationConfig{}, RepairConfig{}, 4);
  EXPECT_EQ(rep.files, 0u);
  EXPECT_EQ(rep.overall.total, 0u);
  EXPECT_TRUE(rep.benchmarks.empty());
  EXPECT_TRUE(rep.records.empty());
}

TEST_F(TempCorpus, BrokenFilesAreSkippedNotFatal) {
  put("a/good.pp", "file { '/a': ensure => file, mode => '0644' }\n");
  put("a/bad.pp", "file { '/a' ensure => }\n");
  put("b/cron.pp", "cron { 'x': command => 'y' }\n");
  put("b/notes.txt", "ignored");
  auto rep = run_suite(root_, MutationConfig{}, RepairConfig{}, 2);
  EXPECT_EQ(rep.files, 3u);
  ASSERT_EQ(rep.skipped.size(), 2u);
  EXPECT_NE(rep.skipped[0].reason.find("parse-error"), std::string::npos);
  EXPECT_NE(rep.skipped[1].reason.find("generation-skip"), std::string::npos);
  EXPECT_GT(rep.overall.total, 0u);
  EXPECT_EQ(benchmark_of(root_, root_ / "a" / "good.pp"), "a");
}

TEST(Suite, MissingCorpusIsIoError) {
  EXPECT_THROW(run_suite("/nonexistent/corpus", MutationConfig{}, RepairConfig{}, 1), IoError);
}
