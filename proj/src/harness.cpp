#include "infrafix/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "infrafix/infer.hpp"
#include "infrafix/patch.hpp"

namespace infrafix {

namespace fs = std::filesystem;

std::map<std::string, std::vector<std::string>> MutationConfig::default_value_pools() {
  const std::vector<std::string> owners{"root", "daemon", "www-data"};
  const std::vector<std::string> ids{"1000", "1001", "2000"};
  return {
      {"file.owner", owners},
      {"file.group", owners},
      {"file.mode", {"0644", "0600", "0755", "0700"}},
      {"file.content", {"managed", "placeholder"}},
      {"package.version", {"1.0.0", "2.0.0"}},
      {"user.uid", ids},
      {"user.gid", ids},
      {"user.shell", {"/bin/bash", "/bin/sh", "/usr/sbin/nologin"}},
  };
}

std::map<std::string, std::vector<std::string>> MutationConfig::default_suffix_pools() {
  return {{"file.target", {".bak", ".new"}}, {"user.home", {".bak", ".new"}}};
}

std::vector<std::string> MutationConfig::pool(const std::string& type, const std::string& attr,
                                              const std::string& current) const {
  const std::string key = type + "." + attr;
  std::vector<std::string> out;
  if (auto it = value_pools.find(key); it != value_pools.end()) {
    for (const auto& v : it->second) {
      if (v != current) out.push_back(v);
    }
  } else if (auto sit = suffix_pools.find(key); sit != suffix_pools.end()) {
    for (const auto& suffix : sit->second) out.push_back(current + suffix);
  } else if (const auto* closed = CanonicalModel::builtin().closed_values(type, attr)) {
    for (const auto& v : *closed) {
      if (v != current) out.push_back(v);
    }
  }
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform draw in [0, n). Distribution objects differ between standard
// libraries, so the reduction is done by hand to keep scenario sets portable.
std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

struct Target {
  std::size_t resource;
  std::string attribute;
  std::vector<std::string> pool;
};

SystemState comparable(const SystemState& state) {
  SystemState out;
  for (const auto& r : state.resources) {
    ResourceState copy{r.id, {}};
    for (const auto& [k, v] : r.attributes) {
      if (v != kUnknownValue) copy.attributes.emplace(k, v);
    }
    if (!copy.attributes.empty()) out.resources.push_back(std::move(copy));
  }
  return out;
}

}  // namespace

std::vector<Scenario> generate_scenarios(const IRScript& script, const MutationConfig& cfg,
                                         const std::string& stream) {
  if (cfg.min_mutations < 1 || cfg.max_mutations < cfg.min_mutations) {
    throw EngineError("mutation range must satisfy 1 <= min <= max");
  }
  const CanonicalModel& model = CanonicalModel::builtin();
  const auto states = infer_states(script);

  std::vector<Scenario> out;
  std::set<std::string> seen;
  bool any_target = false;

  for (std::size_t si = 0; si < states.size(); ++si) {
    const SystemState& base = states[si].state;
    std::vector<Target> targets;
    for (std::size_t ri = 0; ri < base.resources.size(); ++ri) {
      const auto& r = base.resources[ri];
      const std::string type = r.type();
      if (!model.supported(type)) continue;
      for (const auto& [attr, value] : r.attributes) {
        if (value == kUnknownValue || attr == model.identifying_attr(type)) continue;
        auto pool = cfg.pool(type, attr, value);
        if (!pool.empty()) targets.push_back({ri, attr, std::move(pool)});
      }
    }
    if (targets.empty()) continue;
    any_target = true;

    std::mt19937_64 rng(cfg.seed ^ fnv1a(stream) ^ (0x9e3779b97f4a7c15ULL * (si + 1)));
    for (std::size_t n = 0; n < cfg.scenarios_per_state; ++n) {
      std::size_t k = static_cast<std::size_t>(cfg.min_mutations) +
                      pick(rng, static_cast<std::size_t>(cfg.max_mutations - cfg.min_mutations + 1));
      k = std::min(k, targets.size());
      std::vector<std::size_t> order(targets.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + pick(rng, order.size() - i)]);

      SystemState mutated = base;
      Scenario sc;
      for (std::size_t i = 0; i < k; ++i) {
        const Target& t = targets[order[i]];
        auto& slot = mutated.resources[t.resource].attributes[t.attribute];
        const std::string& to = t.pool[pick(rng, t.pool.size())];
        sc.mutations.push_back({mutated.resources[t.resource].id, t.attribute, slot, to});
        slot = to;
      }
      sc.desired = comparable(mutated);

      bool already = std::any_of(states.begin(), states.end(),
                                 [&](const InferredState& s) { return satisfies(s.state, sc.desired); });
      if (already || !seen.insert(serialize_state(sc.desired)).second) continue;
      sc.tech = script.tech;
      sc.state_index = si;
      sc.seed = cfg.seed;
      out.push_back(std::move(sc));
    }
  }
  if (!any_target) throw GenerationSkip("no mutable attributes");
  return out;
}

std::string_view status_name(ScenarioStatus status) {
  switch (status) {
    case ScenarioStatus::Passed: return "passed";
    case ScenarioStatus::Failed: return "failed";
    case ScenarioStatus::Error: return "error";
    case ScenarioStatus::Timeout: return "timeout";
  }
  return "?";
}

void check_solution(const RepairSolution& solution, const IRScript& raw, const IRScript& normalized,
                    const NormalizationDb& db, const SystemState& desired, SoundnessCheck& out) {
  ++out.solutions;
  auto note = [&](const std::string& what) {
    if (out.first_problem.empty()) out.first_problem = what;
  };
  if (!verify_solution(normalized, solution, desired)) {
    ++out.verify_failures;
    note("solution does not verify in memory");
  }

  std::vector<TextPatch> patches;
  std::string patched;
  try {
    patches = render_edits(solution, raw, db);
    patched = apply_patches(raw.source, patches);
  } catch (const Error& e) {
    ++out.closure_failures;
    note(std::string("patch rendering: ") + e.what());
    return;
  }

  try {
    auto reparsed = normalize_script(parse_script(raw.tech, patched), normalized.db);
    const auto states = infer_states(reparsed);
    bool ok = std::any_of(states.begin(), states.end(),
                          [&](const InferredState& s) { return satisfies(s.state, desired); });
    if (!ok) {
      ++out.closure_failures;
      note("patched script does not reach the desired state");
    }
  } catch (const Error& e) {
    ++out.closure_failures;
    note(std::string("patched script: ") + e.what());
  }

  // Locality: every byte outside the patch ranges must survive unchanged and
  // in order. Checked directly on the two texts rather than through the
  // splicing code.
  const std::string& src = raw.source;
  bool local = true;
  std::size_t o = 0;
  std::size_t p = 0;
  for (const auto& tp : patches) {
    if (tp.byte_start < o || tp.byte_end < tp.byte_start || tp.byte_end > src.size()) {
      local = false;
      break;
    }
    std::string_view keep(src.data() + o, tp.byte_start - o);
    if (patched.compare(p, keep.size(), keep) != 0) {
      local = false;
      break;
    }
    p += keep.size() + tp.replacement.size();
    o = tp.byte_end;
  }
  if (local) {
    std::string_view tail(src.data() + o, src.size() - o);
    local = p <= patched.size() && patched.size() - p == tail.size() && patched.compare(p, tail.size(), tail) == 0;
  }
  if (!local) {
    ++out.locality_failures;
    note("bytes outside patch ranges changed");
  }
  if (solution.edits.empty() && (patched != src || !patches.empty())) {
    ++out.zero_edit_changes;
    note("zero-edit solution altered the file");
  }
}

ScenarioOutcome run_scenario(const Scenario& scenario, const IRScript& raw,
                             std::shared_ptr<const NormalizationDb> db, const RepairConfig& cfg,
                             const RepairFn& repair_fn) {
  ScenarioOutcome out;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto fail = [&](const std::string& cls, const std::string& detail) {
    out.status = ScenarioStatus::Error;
    out.failure_class = cls;
    out.detail = detail;
    out.wall_time = elapsed();
    return out;
  };

  IRScript normalized;
  RepairResult result;
  try {
    normalized = normalize_script(raw, db);
    result = repair_fn ? repair_fn(normalized, scenario.desired, cfg) : repair(normalized, scenario.desired, cfg);
  } catch (const ParseError& e) {
    return fail("parse-error", e.what());
  } catch (const InferenceError& e) {
    return fail("unknown-identifier", e.what());
  } catch (const CapacityError& e) {
    return fail("branch-cap", e.what());
  } catch (const std::exception& e) {
    return fail("engine-fault", e.what());
  }
  out.wall_time = elapsed();
  out.solutions_found = result.solutions.size();
  if (!result.solutions.empty()) out.best_cost = result.solutions.front().total_cost;

  std::size_t verified = 0;
  for (const auto& sol : result.solutions) {
    const std::size_t before = out.soundness.verify_failures;
    check_solution(sol, raw, normalized, *db, scenario.desired, out.soundness);
    if (out.soundness.verify_failures == before) ++verified;
  }

  if (verified > 0) {
    out.status = ScenarioStatus::Passed;
  } else if (result.timed_out) {
    out.status = ScenarioStatus::Timeout;
    out.detail = "deadline elapsed without a verified solution";
  } else {
    out.status = ScenarioStatus::Failed;
    out.failure_class = result.solutions.empty() ? result.failure_class : "unverified";
    if (out.failure_class.empty()) out.failure_class = "no-candidate";
    out.detail = result.failure_detail;
  }
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

ScenarioOutcome run_scenario(const Scenario& scenario, const RepairConfig& cfg) {
  auto db = load_default_db();
  IRScript raw;
  try {
    raw = parse_script(scenario.tech, read_text_file(scenario.script_path));
  } catch (const Error& e) {
    ScenarioOutcome out;
    out.status = ScenarioStatus::Error;
    out.failure_class = dynamic_cast<const ParseError*>(&e) ? "parse-error" : "io";
    out.detail = e.what();
    return out;
  }
  return run_scenario(scenario, raw, db, cfg);
}

void StatusCounts::add(ScenarioStatus s) {
  ++total;
  switch (s) {
    case ScenarioStatus::Passed: ++passed; break;
    case ScenarioStatus::Failed: ++failed; break;
    case ScenarioStatus::Error: ++error; break;
    case ScenarioStatus::Timeout: ++timeout; break;
  }
}

std::vector<fs::path> corpus_files(const fs::path& corpus) {
  std::error_code ec;
  if (!fs::is_directory(corpus, ec)) throw IoError("corpus is not a directory: " + corpus.string());
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(corpus, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && detect_tech(it->path())) files.push_back(it->path());
  }
  if (ec) throw IoError("cannot list " + corpus.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return a.lexically_relative(corpus).generic_string() < b.lexically_relative(corpus).generic_string();
  });
  return files;
}

std::string benchmark_of(const fs::path& corpus, const fs::path& file) {
  fs::path rel = file.lexically_relative(corpus);
  auto it = rel.begin();
  if (it == rel.end()) return "corpus";
  fs::path first = *it;
  return ++it == rel.end() ? std::string("corpus") : first.generic_string();
}

std::vector<Scenario> file_scenarios(const fs::path& corpus, const fs::path& file,
                                     std::shared_ptr<const NormalizationDb> db, const MutationConfig& cfg) {
  auto tech = detect_tech(file);
  if (!tech) throw IoError("unsupported file extension: " + file.string());
  auto raw = parse_script(*tech, read_text_file(file));
  auto normalized = normalize_script(raw, std::move(db));
  const std::string rel = file.lexically_relative(corpus).generic_string();
  auto scenarios = generate_scenarios(normalized, cfg, rel);
  const std::string bench = benchmark_of(corpus, file);
  for (auto& s : scenarios) {
    s.script_path = file.string();
    s.benchmark = bench;
  }
  return scenarios;
}

namespace {

struct FileResult {
  std::vector<ScenarioRecord> records;
  std::optional<SkippedFile> skipped;
};

FileResult run_file(const fs::path& corpus, const fs::path& file, const std::shared_ptr<const NormalizationDb>& db,
                    const MutationConfig& mcfg, const RepairConfig& rcfg) {
  FileResult out;
  const std::string rel = file.lexically_relative(corpus).generic_string();
  std::vector<Scenario> scenarios;
  IRScript raw;
  try {
    scenarios = file_scenarios(corpus, file, db, mcfg);
    raw = parse_script(*detect_tech(file), read_text_file(file));
  } catch (const GenerationSkip& e) {
    out.skipped = SkippedFile{rel, std::string("generation-skip: ") + e.what()};
    return out;
  } catch (const ParseError& e) {
    out.skipped = SkippedFile{rel, "parse-error: " + e.kind() + ": " + e.what()};
    return out;
  } catch (const std::exception& e) {
    out.skipped = SkippedFile{rel, e.what()};
    return out;
  }
  for (auto& sc : scenarios) {
    ScenarioOutcome outcome = run_scenario(sc, raw, db, rcfg);
    out.records.push_back({std::move(sc), std::move(outcome)});
  }
  return out;
}

SuiteReport assemble(std::vector<FileResult>& results, std::size_t files) {
  SuiteReport report;
  report.files = files;
  std::map<std::string, StatusCounts> benches;
  std::map<std::string, StatusCounts> techs;
  for (auto& fr : results) {
    if (fr.skipped) report.skipped.push_back(std::move(*fr.skipped));
    for (auto& rec : fr.records) {
      auto& b = benches[rec.scenario.benchmark];
      b.name = rec.scenario.benchmark;
      b.add(rec.outcome.status);
      auto& t = techs[std::string(tech_name(rec.scenario.tech))];
      t.name = tech_name(rec.scenario.tech);
      t.add(rec.outcome.status);
      report.overall.add(rec.outcome.status);
      report.records.push_back(std::move(rec));
    }
  }
  for (auto& [_, c] : benches) report.benchmarks.push_back(c);
  for (auto& [_, c] : techs) report.techs.push_back(c);
  return report;
}

}  // namespace

SuiteReport run_suite(const fs::path& corpus, const MutationConfig& mutation_cfg, const RepairConfig& repair_cfg,
                      int workers, std::shared_ptr<const NormalizationDb> db) {
  if (!db) db = load_default_db();
  const auto files = corpus_files(corpus);
  std::vector<FileResult> results(files.size());
  const int n = static_cast<int>(files.size());
  workers = std::max(1, workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int i = 0; i < n; ++i) {
    results[i] = run_file(corpus, files[i], db, mutation_cfg, repair_cfg);
  }
  return assemble(results, files.size());
}

SuiteReport run_suite_serial(const fs::path& corpus, const MutationConfig& mutation_cfg,
                             const RepairConfig& repair_cfg, std::shared_ptr<const NormalizationDb> db) {
  if (!db) db = load_default_db();
  const auto files = corpus_files(corpus);
  std::vector<FileResult> results;
  for (const auto& f : files) results.push_back(run_file(corpus, f, db, mutation_cfg, repair_cfg));
  return assemble(results, files.size());
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  nlohmann::json muts = nlohmann::json::array();
  for (const auto& m : scenario.mutations) {
    muts.push_back({{"resource", m.resource_id}, {"attribute", m.attribute}, {"from", m.from}, {"to", m.to}});
  }
  return {{"script", scenario.script_path},
          {"tech", tech_name(scenario.tech)},
          {"benchmark", scenario.benchmark},
          {"state_index", scenario.state_index},
          {"seed", scenario.seed},
          {"mutations", muts},
          {"desired", state_to_json(scenario.desired)}};
}

namespace {

nlohmann::json counts_json(const StatusCounts& c) {
  return {{"name", c.name},
          {"total", c.total},
          {"passed", c.passed},
          {"failed", c.failed},
          {"error", c.error},
          {"timeout", c.timeout},
          {"passed_pct", c.percent(c.passed)},
          {"failed_pct", c.percent(c.failed)},
          {"error_pct", c.percent(c.error)},
          {"timeout_pct", c.percent(c.timeout)}};
}

}  // namespace

nlohmann::json report_to_json(const SuiteReport& report) {
  nlohmann::json j;
  j["files"] = report.files;
  j["total"] = counts_json(report.overall);
  j["benchmarks"] = nlohmann::json::array();
  for (const auto& b : report.benchmarks) j["benchmarks"].push_back(counts_json(b));
  j["techs"] = nlohmann::json::array();
  for (const auto& t : report.techs) j["techs"].push_back(counts_json(t));
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : report.skipped) j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
  j["scenarios"] = nlohmann::json::array();
  for (const auto& r : report.records) {
    auto rec = scenario_to_json(r.scenario);
    const auto& o = r.outcome;
    rec["status"] = status_name(o.status);
    rec["solutions_found"] = o.solutions_found;
    rec["wall_time"] = o.wall_time;
    rec["best_cost"] = o.best_cost;
    if (!o.failure_class.empty()) rec["failure_class"] = o.failure_class;
    if (!o.detail.empty()) rec["detail"] = o.detail;
    rec["soundness"] = {{"solutions", o.soundness.solutions},
                        {"verify_failures", o.soundness.verify_failures},
                        {"closure_failures", o.soundness.closure_failures},
                        {"locality_failures", o.soundness.locality_failures},
                        {"zero_edit_changes", o.soundness.zero_edit_changes}};
    if (!o.soundness.first_problem.empty()) rec["soundness"]["first_problem"] = o.soundness.first_problem;
    j["scenarios"].push_back(std::move(rec));
  }
  return j;
}

std::string report_table(const SuiteReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %7s %9s %9s %9s %10s\n", "Benchmark", "Total", "Passed %", "Failed %",
                "Error %", "Timeout %");
  out << line;
  auto row = [&](const StatusCounts& c) {
    std::snprintf(line, sizeof line, "%-12s %7zu %9.1f %9.1f %9.1f %10.1f\n", c.name.c_str(), c.total,
                  c.percent(c.passed), c.percent(c.failed), c.percent(c.error), c.percent(c.timeout));
    out << line;
  };
  for (const auto& b : report.benchmarks) row(b);
  row(report.overall);
  return out.str();
}

}  // namespace infrafix
