#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "infrafix/error.hpp"
#include "infrafix/ir.hpp"
#include "infrafix/normalize.hpp"
#include "infrafix/repair.hpp"
#include "infrafix/state.hpp"

namespace infrafix {

struct MutationConfig {
  int min_mutations = 1;
  int max_mutations = 3;
  std::size_t scenarios_per_state = 25;
  std::uint64_t seed = 42;
  // Candidate values per "type.attribute". Closed sets of the canonical model
  // are used for attributes listed in neither map.
  std::map<std::string, std::vector<std::string>> value_pools = default_value_pools();
  // Attributes mutated by suffixing their current value.
  std::map<std::string, std::vector<std::string>> suffix_pools = default_suffix_pools();

  static std::map<std::string, std::vector<std::string>> default_value_pools();
  static std::map<std::string, std::vector<std::string>> default_suffix_pools();

  // Pool for one attribute given its current value; never contains `current`.
  std::vector<std::string> pool(const std::string& type, const std::string& attr, const std::string& current) const;
};

struct Mutation {
  std::string resource_id;
  std::string attribute;
  std::string from;
  std::string to;
};

struct Scenario {
  std::string script_path;
  Tech tech = Tech::Puppet;
  std::string benchmark;
  SystemState desired;
  std::size_t state_index = 0;
  std::vector<Mutation> mutations;
  std::uint64_t seed = 0;
};

// The script offers nothing to mutate; the file produces no scenarios.
class GenerationSkip : public Error {
 public:
  using Error::Error;
};

// Scenarios for every inferred state of a normalized script. `stream` keys
// the random stream so a file's scenarios do not depend on processing order.
std::vector<Scenario> generate_scenarios(const IRScript& script, const MutationConfig& cfg,
                                         const std::string& stream = "");

enum class ScenarioStatus { Passed, Failed, Error, Timeout };

std::string_view status_name(ScenarioStatus status);

// Post-pass checks over every emitted solution.
struct SoundnessCheck {
  std::size_t solutions = 0;
  std::size_t verify_failures = 0;
  std::size_t closure_failures = 0;   // render, apply, re-parse, re-infer, satisfies
  std::size_t locality_failures = 0;  // bytes outside patch ranges changed
  std::size_t zero_edit_changes = 0;  // zero-edit solutions that altered the file
  std::string first_problem;

  bool clean() const {
    return verify_failures == 0 && closure_failures == 0 && locality_failures == 0 && zero_edit_changes == 0;
  }
};

struct ScenarioOutcome {
  ScenarioStatus status = ScenarioStatus::Failed;
  std::size_t solutions_found = 0;
  double wall_time = 0.0;
  std::string failure_class;  // set for Failed and Error
  std::string detail;
  int best_cost = -1;
  SoundnessCheck soundness;
};

using RepairFn = std::function<RepairResult(const IRScript&, const SystemState&, const RepairConfig&)>;

// Runs the engine on one scenario. Never throws: engine exceptions become
// Error outcomes. `repair_fn` defaults to the real engine.
ScenarioOutcome run_scenario(const Scenario& scenario, const IRScript& raw,
                             std::shared_ptr<const NormalizationDb> db, const RepairConfig& cfg,
                             const RepairFn& repair_fn = {});
// Reads and parses `scenario.script_path` with the default database first.
ScenarioOutcome run_scenario(const Scenario& scenario, const RepairConfig& cfg);

// Checks one solution end to end against the raw script text.
void check_solution(const RepairSolution& solution, const IRScript& raw, const IRScript& normalized,
                    const NormalizationDb& db, const SystemState& desired, SoundnessCheck& out);

struct ScenarioRecord {
  Scenario scenario;
  ScenarioOutcome outcome;
};

struct StatusCounts {
  std::string name;
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t error = 0;
  std::size_t timeout = 0;

  void add(ScenarioStatus s);
  double percent(std::size_t n) const { return total ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0; }
  bool operator==(const StatusCounts&) const = default;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct SuiteReport {
  std::vector<StatusCounts> benchmarks;  // sorted by name
  std::vector<StatusCounts> techs;       // "ansible", "puppet"
  StatusCounts overall{"total"};
  std::vector<ScenarioRecord> records;   // file order, then generation order
  std::vector<SkippedFile> skipped;
  std::size_t files = 0;
};

// Supported scripts under `corpus`, sorted by relative path.
std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& corpus);

// Benchmark name of a corpus file: its first directory below the corpus root.
std::string benchmark_of(const std::filesystem::path& corpus, const std::filesystem::path& file);

// Scenario generation for one corpus file, as run_suite does it. Throws on
// unreadable, unparsable or non-inferable files and GenerationSkip.
std::vector<Scenario> file_scenarios(const std::filesystem::path& corpus, const std::filesystem::path& file,
                                     std::shared_ptr<const NormalizationDb> db, const MutationConfig& cfg);

std::string read_text_file(const std::filesystem::path& path);

// Files are spread over `workers` OpenMP threads; every scenario of one file
// runs on the same thread and records are merged back in file order.
SuiteReport run_suite(const std::filesystem::path& corpus, const MutationConfig& mutation_cfg,
                      const RepairConfig& repair_cfg, int workers,
                      std::shared_ptr<const NormalizationDb> db = nullptr);
// Single-threaded reference implementation of run_suite.
SuiteReport run_suite_serial(const std::filesystem::path& corpus, const MutationConfig& mutation_cfg,
                             const RepairConfig& repair_cfg, std::shared_ptr<const NormalizationDb> db = nullptr);

nlohmann::json scenario_to_json(const Scenario& scenario);
nlohmann::json report_to_json(const SuiteReport& report);
// Total, Passed %, Failed %, Error %, Timeout % per benchmark.
std::string report_table(const SuiteReport& report);

}  // namespace infrafix
