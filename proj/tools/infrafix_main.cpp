#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "infrafix/harness.hpp"
#include "infrafix/infer.hpp"
#include "infrafix/normalize.hpp"
#include "infrafix/patch.hpp"
#include "infrafix/repair.hpp"
#include "infrafix/state.hpp"

namespace fs = std::filesystem;
using namespace infrafix;

namespace {

enum Exit : int {
  kOk = 0,
  kNoSolution = 1,
  kParse = 2,
  kBranchCap = 3,
  kTimeout = 4,
  kIo = 5,
  kBelowPassRate = 6,
  kEngine = 7,
};

void write_output(const std::string& target, const std::string& text) {
  if (target == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(target, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + target);
}

Tech resolve_tech(const std::string& flag, const fs::path& script) {
  if (!flag.empty()) {
    if (auto t = tech_from_name(flag)) return *t;
    throw FormatError("unknown technology '" + flag + "' (expected ansible or puppet)");
  }
  if (auto t = detect_tech(script)) return *t;
  throw FormatError("cannot tell the technology of " + script.string() + "; pass --tech");
}

// Runs a subcommand body and maps library exceptions to exit codes. `subject`
// (a file or corpus path) prefixes every diagnostic.
template <typename F>
int guarded(const std::string& subject, F&& body) {
  const std::string at = subject.empty() ? "" : subject + ": ";
  try {
    return body();
  } catch (const ParseError& e) {
    std::cerr << at << "parse error (" << e.kind() << ") at " << e.what() << "\n";
    return kParse;
  } catch (const FormatError& e) {
    std::cerr << at << "format error: " << e.what() << "\n";
    return kParse;
  } catch (const CapacityError& e) {
    std::cerr << at << "branch cap exceeded: " << e.what() << "\n";
    return kBranchCap;
  } catch (const IoError& e) {
    std::cerr << at << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const LoadError& e) {
    std::cerr << at << "normalization db: " << e.what() << "\n";
    return kIo;
  } catch (const InferenceError& e) {
    std::cerr << at << "inference error (unknown-identifier): " << e.what() << "\n";
    return kEngine;
  } catch (const std::exception& e) {
    std::cerr << at << "error: " << e.what() << "\n";
    return kEngine;
  }
}

nlohmann::json branches_json(const BranchPath& path) {
  auto out = nlohmann::json::array();
  for (const auto& [cond, branch] : path) {
    out.push_back({{"conditional", cond}, {"branch", branch == Branch::Then ? "then" : "else"}});
  }
  return out;
}

struct InferArgs {
  std::string tech;
  std::string script;
  std::string out = "-";
  std::string trace;
  std::string fs_root;
  bool content_hash = false;
};

int cmd_infer(const InferArgs& a) {
  if (!a.trace.empty()) {
    if (a.fs_root.empty()) throw FormatError("--trace requires --fs-root");
    TraceOptions opts;
    opts.content_hash = a.content_hash;
    auto result = infer_from_trace(read_text_file(a.trace), a.fs_root, opts);
    if (result.skipped_lines) std::cerr << "skipped " << result.skipped_lines << " trace line(s)\n";
    write_output(a.out, serialize_state(result.state));
    return kOk;
  }
  if (a.script.empty()) throw FormatError("infer needs --script or --trace");
  Tech tech = resolve_tech(a.tech, a.script);
  auto script = normalize_script(parse_script(tech, read_text_file(a.script)), load_default_db());
  auto states = infer_states(script);
  if (states.size() == 1) {
    write_output(a.out, serialize_state(states.front().state));
    return kOk;
  }
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& s : states) {
    nlohmann::ordered_json entry;
    entry["branch_decisions"] = branches_json(s.branch_decisions);
    entry["state"] = nlohmann::ordered_json::parse(serialize_state(s.state));
    all.push_back(std::move(entry));
  }
  write_output(a.out, all.dump(2) + "\n");
  return kOk;
}

struct RepairArgs {
  std::string tech;
  std::string script;
  std::string state;
  std::size_t max_solutions = 10;
  double timeout = 120.0;
  bool diff = false;
  std::string out;
  bool no_insert = false;
};

std::string describe(const Edit& e) {
  const EditSite& s = e.site;
  std::string where;
  switch (s.kind) {
    case SiteKind::AttributeValue:
    case SiteKind::MissingAttribute: where = s.resource_id + "." + s.attribute; break;
    case SiteKind::VariableLiteral: where = "$" + s.variable; break;
    case SiteKind::ConditionLiteral: where = "condition #" + std::to_string(s.conditional); break;
    case SiteKind::MissingResource: where = s.resource_id; break;
  }
  std::string line = std::string(site_kind_name(s.kind)) + " " + where;
  if (s.existing()) line += " @" + std::to_string(s.span.start_line) + ":" + std::to_string(s.span.start_col);
  if (s.kind != SiteKind::MissingResource) line += " := '" + e.raw_value + "'";
  return line;
}

int cmd_repair(const RepairArgs& a) {
  Tech tech = resolve_tech(a.tech, a.script);
  auto db = load_default_db();
  auto raw = parse_script(tech, read_text_file(a.script));
  auto desired = parse_state(read_text_file(a.state));
  auto normalized = normalize_script(raw, db);

  RepairConfig cfg;
  cfg.max_solutions = a.max_solutions;
  cfg.timeout_seconds = a.timeout;
  cfg.allow_resource_insertion = !a.no_insert;
  const auto start = std::chrono::steady_clock::now();
  RepairResult result = repair(normalized, desired, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (result.solutions.empty()) {
    if (result.timed_out) {
      std::cerr << "timeout after " << secs << " s without a solution\n";
      return kTimeout;
    }
    std::cerr << "no repair found (" << result.failure_class << ")";
    if (!result.failure_detail.empty()) std::cerr << ": " << result.failure_detail;
    std::cerr << "\n";
    return kNoSolution;
  }

  const fs::path script_path(a.script);
  const fs::path out_dir = a.out.empty() ? script_path.parent_path() : fs::path(a.out);
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  }
  const std::string base = script_path.filename().string();
  std::printf("%zu solution(s) in %.3f s%s\n", result.solutions.size(), secs,
              result.timed_out ? " (search stopped at the deadline)" : "");
  for (std::size_t i = 0; i < result.solutions.size(); ++i) {
    const auto& sol = result.solutions[i];
    const std::string patched = apply_patches(raw.source, render_edits(sol, raw, *db));
    const std::string name = base + ".fix" + std::to_string(i + 1);
    const fs::path target = out_dir / name;
    write_output(target.string(), patched);
    std::printf("[%zu] cost %d -> %s\n", i + 1, sol.total_cost, target.string().c_str());
    for (const auto& e : sol.edits) std::printf("    %s\n", describe(e).c_str());
    if (a.diff) {
      const std::string d = unified_diff(raw.source, patched, "a/" + base, "b/" + base);
      write_output((out_dir / (name + ".diff")).string(), d);
      std::fputs(d.c_str(), stdout);
    }
  }
  return kOk;
}

struct ScenarioArgs {
  std::string corpus = "corpus";
  std::uint64_t seed = 42;
  int workers = 1;
  std::string report;
  std::string out;
  double timeout = 120.0;
  std::size_t per_state = 25;
  int min_mutations = 1;
  int max_mutations = 3;
  std::optional<double> min_pass_rate;
};

MutationConfig mutation_config(const ScenarioArgs& a) {
  MutationConfig m;
  m.seed = a.seed;
  m.scenarios_per_state = a.per_state;
  m.min_mutations = a.min_mutations;
  m.max_mutations = a.max_mutations;
  return m;
}

int cmd_scenarios_gen(const ScenarioArgs& a) {
  if (a.out.empty()) throw FormatError("scenarios gen needs --out DIR (or - for stdout)");
  auto db = load_default_db();
  const auto files = corpus_files(a.corpus);
  const MutationConfig m = mutation_config(a);
  std::size_t total = 0;
  nlohmann::json all = nlohmann::json::array();
  for (const auto& f : files) {
    const std::string rel = f.lexically_relative(a.corpus).generic_string();
    std::vector<Scenario> scenarios;
    try {
      scenarios = file_scenarios(a.corpus, f, db, m);
    } catch (const Error& e) {
      std::cerr << "skip " << rel << ": " << e.what() << "\n";
      continue;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : scenarios) arr.push_back(scenario_to_json(s));
    total += scenarios.size();
    if (a.out == "-") {
      for (auto& s : arr) all.push_back(std::move(s));
      continue;
    }
    std::string flat = rel;
    for (auto& c : flat) {
      if (c == '/') c = '_';
    }
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
    write_output((fs::path(a.out) / (flat + ".scenarios.json")).string(), arr.dump(2) + "\n");
  }
  if (a.out == "-") write_output("-", all.dump(2) + "\n");
  std::cerr << total << " scenario(s) from " << files.size() << " file(s)\n";
  return total == 0 ? kNoSolution : kOk;
}

int cmd_scenarios_run(const ScenarioArgs& a) {
  RepairConfig rcfg;
  rcfg.timeout_seconds = a.timeout;
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report = run_suite(a.corpus, mutation_config(a), rcfg, a.workers);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& s : report.skipped) std::cerr << "skip " << s.path << ": " << s.reason << "\n";
  if (!a.report.empty()) write_output(a.report, report_to_json(report).dump(2) + "\n");
  // Keep stdout machine-readable when the report goes there.
  std::ostream& human = a.report == "-" ? std::cerr : std::cout;
  human << report_table(report);
  char summary[128];
  std::snprintf(summary, sizeof summary, "%zu file(s), %zu skipped, %.1f s\n", report.files, report.skipped.size(),
                secs);
  human << summary;
  if (report.overall.total == 0) {
    std::cerr << "no scenarios generated\n";
    return kNoSolution;
  }
  if (a.min_pass_rate) {
    const double rate = static_cast<double>(report.overall.passed) / static_cast<double>(report.overall.total);
    if (rate < *a.min_pass_rate) {
      std::cerr << "pass rate " << rate << " below " << *a.min_pass_rate << "\n";
      return kBelowPassRate;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repairs Ansible and Puppet scripts against a desired system state"};
  app.require_subcommand(1);

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Infer the system state(s) a script or trace produces");
  infer->add_option("--tech", ia.tech, "ansible or puppet (default: from the extension)");
  infer->add_option("--script", ia.script, "Script to analyse");
  infer->add_option("--out", ia.out, "Output file, - for stdout")->capture_default_str();
  infer->add_option("--trace", ia.trace, "Syscall trace log instead of a script");
  infer->add_option("--fs-root", ia.fs_root, "Directory the traced paths are resolved against");
  infer->add_flag("--content-hash", ia.content_hash, "Record a checksum attribute for regular files");

  RepairArgs ra;
  auto* rep = app.add_subcommand("repair", "Repair a script so that it produces a desired state");
  rep->add_option("--tech", ra.tech, "ansible or puppet (default: from the extension)");
  rep->add_option("--script", ra.script, "Script to repair")->required();
  rep->add_option("--state", ra.state, "Desired state (JSON)")->required();
  rep->add_option("--max-solutions", ra.max_solutions)->capture_default_str()->check(CLI::PositiveNumber);
  rep->add_option("--timeout", ra.timeout, "Seconds")->capture_default_str()->check(CLI::PositiveNumber);
  rep->add_flag("--diff", ra.diff, "Also write and print unified diffs");
  rep->add_option("--out", ra.out, "Directory for patched scripts (default: next to the script)");
  rep->add_flag("--no-insert", ra.no_insert, "Never insert new resources");

  ScenarioArgs sa;
  auto* sc = app.add_subcommand("scenarios", "Generate or run mutation-based repair scenarios");
  sc->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--corpus", sa.corpus)->capture_default_str();
    c->add_option("--seed", sa.seed)->capture_default_str();
    c->add_option("--scenarios-per-state", sa.per_state)->capture_default_str();
    c->add_option("--min-mutations", sa.min_mutations)->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--max-mutations", sa.max_mutations)->capture_default_str()->check(CLI::PositiveNumber);
  };
  auto* gen = sc->add_subcommand("gen", "Write generated scenarios");
  common(gen);
  gen->add_option("--out", sa.out, "Directory for scenario files, - for stdout")->required();
  auto* run = sc->add_subcommand("run", "Run every scenario and report outcomes");
  common(run);
  run->add_option("--workers", sa.workers)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--report", sa.report, "JSON report file, - for stdout");
  run->add_option("--timeout", sa.timeout, "Per-scenario repair timeout in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run->add_option("--min-pass-rate", sa.min_pass_rate, "Fail with exit 6 below this Passed fraction")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  if (*infer) return guarded(ia.script.empty() ? ia.trace : ia.script, [&] { return cmd_infer(ia); });
  if (*rep) return guarded(ra.script, [&] { return cmd_repair(ra); });
  if (*gen) return guarded(sa.corpus, [&] { return cmd_scenarios_gen(sa); });
  if (*run) return guarded(sa.corpus, [&] { return cmd_scenarios_run(sa); });
  return kOk;
}
