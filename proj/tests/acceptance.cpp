// One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "infrafix/harness.hpp"
#include "infrafix/patch.hpp"
#include "oracles.hpp"

using namespace infrafix;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = INFRAFIX_SOURCE_DIR;
const fs::path kCorpus = kSource / "corpus";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream why;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) why << what;
    pass = pass && cond;
  }
};

bool any_state_satisfies(const IRScript& normalized, const SystemState& desired) {
  for (const auto& st : infer_states(normalized)) {
    if (satisfies(st.state, desired)) return true;
  }
  return false;
}

// Shared suite run for criteria 2, 3 and 9.
const SuiteReport& suite(int workers) {
  static std::map<int, SuiteReport> cache;
  auto it = cache.find(workers);
  if (it == cache.end()) {
    MutationConfig m;
    m.seed = 42;
    it = cache.emplace(workers, run_suite(kCorpus, m, RepairConfig{}, workers)).first;
  }
  return it->second;
}

double suite_seconds = 0.0;

Verdict steam() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / ("infrafix-accept-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy_file(kSource / "data/steam/steam.yml", dir / "steam.yml");
  const auto t0 = Clock::now();
  const std::string cmd = std::string("'") + INFRAFIX_CLI_PATH + "' repair --script '" + (dir / "steam.yml").string() +
                          "' --state '" + (kSource / "data/steam/desired.json").string() + "' --out '" + dir.string() +
                          "' > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const double elapsed = seconds_since(t0);
  v.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "repair exit status ");
  if (v.pass) {
    const std::string before = read_text_file(dir / "steam.yml");
    const std::string after = read_text_file(dir / "steam.yml.fix1");
    auto patched = oracle::load(Tech::Ansible, after);
    std::size_t packages = 0;
    for (const auto& r : iter_resources(patched)) packages += r.resource->type == "package";
    v.require(packages == 3, "expected two inserted package resources ");
    v.require(after.compare(0, before.size(), before) == 0, "original bytes changed ");
    v.require(any_state_satisfies(patched, parse_state(read_text_file(kSource / "data/steam/desired.json"))),
              "patched playbook does not satisfy the desired state ");
  }
  v.require(elapsed < 5.0, "runtime over 5 s ");
  v.why << "(" << elapsed << " s)";
  fs::remove_all(dir);
  return v;
}

Verdict pass_rate() {
  Verdict v;
  const auto files = corpus_files(kCorpus);
  std::set<Tech> techs;
  for (const auto& f : files) techs.insert(*detect_tech(f));
  v.require(files.size() >= 40 && techs.size() == 2, "corpus must hold >= 40 scripts of both technologies ");
  const auto t0 = Clock::now();
  const SuiteReport& rep = suite(4);
  suite_seconds = seconds_since(t0);
  const double rate = rep.overall.percent(rep.overall.passed);
  v.require(rate >= 95.0, "passed below 95% ");
  static const std::set<std::string> documented = {"undefined-variable", "shared-variable-conflict", "missing-resource",
                                                   "cost-bound",         "no-candidate",             "unverified",
                                                   "parse-error",        "unknown-identifier",       "branch-cap",
                                                   "engine-fault"};
  std::size_t unclassified = 0;
  for (const auto& r : rep.records) {
    const auto s = r.outcome.status;
    if ((s == ScenarioStatus::Failed || s == ScenarioStatus::Error) && !documented.count(r.outcome.failure_class)) {
      ++unclassified;
    }
  }
  v.require(unclassified == 0, "records without a documented failure class ");
  v.require(suite_seconds < 600.0, "runtime over 10 min ");
  v.why << "(" << rep.overall.passed << "/" << rep.overall.total << " = " << rate << "% passed, " << files.size()
        << " files, " << suite_seconds << " s on 4 workers)";
  return v;
}

Verdict soundness() {
  Verdict v;
  std::size_t solutions = 0, bad = 0;
  std::string first;
  for (const auto& r : suite(4).records) {
    const auto& s = r.outcome.soundness;
    solutions += s.solutions;
    if (s.verify_failures || s.closure_failures) {
      ++bad;
      if (first.empty()) first = r.scenario.script_path + ": " + s.first_problem;
    }
  }
  v.require(solutions > 0, "no solutions checked ");
  v.require(bad == 0, "unsound: " + first + " ");
  v.why << "(" << solutions << " solutions verified and re-parsed)";
  return v;
}

Verdict minimality() {
  Verdict v;
  std::mt19937_64 rng(2024);
  int checked = 0, mismatches = 0;
  for (int i = 0; checked < 250 && i < 3000; ++i) {
    auto c = oracle::random_minimality_case(rng);
    IRScript s = oracle::load(Tech::Puppet, c.source);
    if (oracle::existing_site_count(s) > 6 || count_conditionals(s) > 2) continue;
    RepairConfig cfg;
    cfg.max_cost = 4;
    auto result = repair(s, c.desired, cfg);
    if (result.solutions.empty()) continue;
    const int cost = result.solutions.front().total_cost;
    if (cost > 3) continue;  // exhaustive search beyond this is not tractable here
    const bool ok = oracle::brute_force_min_cost(s, c.desired, cost) == -1 &&
                    oracle::witness_holds(s, result.solutions.front(), c.desired);
    mismatches += !ok;
    ++checked;
  }
  v.require(checked >= 200, "fewer than 200 instances ");
  v.require(mismatches == 0, std::to_string(mismatches) + " instances not minimal ");
  v.why << "(" << checked << " instances)";
  return v;
}

Verdict inference() {
  Verdict v;
  std::mt19937_64 rng(99);
  int compared = 0, mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const bool puppet = i % 2 == 0;
    const std::string src = puppet ? oracle::random_puppet(rng, 3) : oracle::random_ansible(rng, 3);
    IRScript s = oracle::load(puppet ? Tech::Puppet : Tech::Ansible, src);
    std::set<std::string> lib, ref;
    bool lib_threw = false, ref_threw = false;
    try {
      lib = oracle::library_states(s);
    } catch (const InferenceError&) {
      lib_threw = true;
    }
    try {
      ref = oracle::brute_force_states(s);
    } catch (const std::runtime_error&) {
      ref_threw = true;
    }
    mismatches += lib != ref || lib_threw != ref_threw;
    ++compared;
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " scripts differ ");
  v.why << "(" << compared << " scripts)";
  return v;
}

Verdict normalization() {
  Verdict v;
  const auto& db = *oracle::db();
  std::size_t rules = 0;
  for (const auto& r : db.rules()) {
    std::string back;
    switch (r.kind) {
      case RuleKind::Type: back = db.denormalize_type(r.tech, db.type(r.tech, r.raw)); break;
      case RuleKind::Attr: back = db.denormalize(db.attribute(r.tech, r.type, r.raw), {r.tech, r.type, std::nullopt}); break;
      case RuleKind::Value:
        back = db.denormalize(db.value(r.tech, r.type, r.attribute, r.raw), {r.tech, r.type, r.attribute});
        break;
    }
    v.require(back == r.raw, "rule for '" + r.raw + "' does not round-trip ");
    ++rules;
  }
  const fs::path golden = kSource / "tests/golden";
  auto a = infer_states(oracle::load(Tech::Ansible, read_text_file(golden / "converge.yml")));
  auto p = infer_states(oracle::load(Tech::Puppet, read_text_file(golden / "converge.pp")));
  const SystemState expected = parse_state(read_text_file(golden / "converge.state.json"));
  v.require(a.size() == 1 && p.size() == 1 && a[0].state == p[0].state && a[0].state == expected,
            "convergence golden differs ");
  v.why << "(" << rules << " rules)";
  return v;
}

Verdict classification() {
  Verdict v;
  auto run = [](Tech tech, const std::string& src, const SystemState& desired, const RepairConfig& cfg,
                const RepairFn& fn = {}) {
    Scenario sc;
    sc.tech = tech;
    sc.script_path = "inline";
    sc.desired = desired;
    return run_scenario(sc, parse_script(tech, src), oracle::db(), cfg, fn).status;
  };
  const std::string lit = "file { '/a': ensure => file, mode => '0644' }\n";
  v.require(run(Tech::Puppet, lit, SystemState{{{"file:/a", {{"mode", "0600"}}}}}, {}) == ScenarioStatus::Passed,
            "literal edit not Passed ");

  std::string big;
  for (int c = 0; c < 6; ++c) {
    big += "if $fact" + std::to_string(c) + " == 'on' {\n";
    for (int r = 0; r < 25; ++r) {
      big += "  file { '/c" + std::to_string(c) + "/f" + std::to_string(r) + "': ensure => file, mode => '0644' }\n";
    }
    big += "}\n";
  }
  RepairConfig tiny;
  tiny.timeout_seconds = 0.001;
  SystemState far{{{"file:/c0/f24", {{"mode", "0600"}}},
                   {"file:/c5/f24", {{"mode", "0600"}}},
                   {"file:/fresh", {{"state", "present"}, {"mode", "0600"}, {"owner", "root"}}}}};
  v.require(run(Tech::Puppet, big, far, tiny) == ScenarioStatus::Timeout, "forced deadline not Timeout ");

  RepairFn fault = [](const IRScript&, const SystemState&, const RepairConfig&) -> RepairResult {
    throw EngineError("injected fault");
  };
  v.require(run(Tech::Puppet, lit, SystemState{{{"file:/a", {{"mode", "0600"}}}}}, {}, fault) == ScenarioStatus::Error,
            "injected fault not Error ");

  RepairConfig no_insert;
  no_insert.allow_resource_insertion = false;
  v.require(run(Tech::Puppet, lit, SystemState{{{"package:steam", {{"state", "present"}}}}}, no_insert) ==
                ScenarioStatus::Failed,
            "no-insert scenario not Failed ");
  return v;
}

// Independent byte comparison: every byte outside the patch ranges must
// appear unchanged and in order in the patched text.
bool only_ranges_touched(const std::string& before, const std::string& after, const std::vector<TextPatch>& patches) {
  std::size_t in = 0, out = 0;
  for (const auto& p : patches) {
    const std::size_t keep = p.byte_start - in;
    if (after.compare(out, keep, before, in, keep) != 0) return false;
    out += keep + p.replacement.size();
    if (after.compare(out - p.replacement.size(), p.replacement.size(), p.replacement) != 0) return false;
    in = p.byte_end;
  }
  return after.size() - out == before.size() - in && after.compare(out, std::string::npos, before, in) == 0;
}

Verdict locality() {
  Verdict v;
  std::size_t patched = 0, zero = 0;
  std::map<std::string, std::pair<std::string, IRScript>> scripts;
  for (const auto& rec : suite(4).records) {
    if (rec.outcome.status != ScenarioStatus::Passed) continue;
    const auto& sc = rec.scenario;
    auto it = scripts.find(sc.script_path);
    if (it == scripts.end()) {
      std::string text = read_text_file(sc.script_path);
      IRScript raw = parse_script(sc.tech, text);
      it = scripts.emplace(sc.script_path, std::make_pair(std::move(text), std::move(raw))).first;
    }
    const auto& [text, raw] = it->second;
    IRScript norm = normalize_script(raw, oracle::db());
    auto result = repair(norm, sc.desired, RepairConfig{});
    for (const auto& sol : result.solutions) {
      auto patches = render_edits(sol, raw, *oracle::db());
      const std::string out = apply_patches(text, patches);
      if (sol.edits.empty()) {
        v.require(patches.empty() && out == text, "zero-edit solution changed " + sc.script_path + " ");
        ++zero;
      } else {
        v.require(only_ranges_touched(text, out, patches), "bytes outside patches changed in " + sc.script_path + " ");
        ++patched;
      }
    }
  }
  // The suite never asks for an already satisfied state, so zero-edit repairs
  // come from each corpus file's own first state.
  for (const auto& f : corpus_files(kCorpus)) {
    const std::string text = read_text_file(f);
    IRScript raw = parse_script(*detect_tech(f), text);
    IRScript norm = normalize_script(raw, oracle::db());
    auto result = repair(norm, infer_states(norm).front().state, RepairConfig{});
    v.require(!result.solutions.empty() && result.solutions.front().edits.empty(), "no zero-edit repair for " +
                                                                                      f.string() + " ");
    if (result.solutions.empty()) continue;
    auto patches = render_edits(result.solutions.front(), raw, *oracle::db());
    v.require(patches.empty() && apply_patches(text, patches) == text, "zero-edit solution changed " + f.string() + " ");
    ++zero;
  }
  for (const auto& r : suite(4).records) {
    v.require(r.outcome.soundness.locality_failures == 0 && r.outcome.soundness.zero_edit_changes == 0,
              "harness post-check reported a locality problem ");
  }
  v.require(patched > 0, "no patched scripts checked ");
  v.why << "(" << patched << " patched, " << zero << " zero-edit)";
  return v;
}

Verdict determinism() {
  Verdict v;
  MutationConfig m;
  m.seed = 42;
  const SuiteReport again = run_suite(kCorpus, m, RepairConfig{}, 4);
  const SuiteReport& one = suite(1);
  const SuiteReport& eight = suite(8);
  const SuiteReport& four = suite(4);
  auto same = [](const SuiteReport& a, const SuiteReport& b) {
    return a.benchmarks == b.benchmarks && a.techs == b.techs && a.overall == b.overall;
  };
  v.require(same(four, again), "two runs differ ");
  v.require(same(one, eight) && same(one, four), "worker count changes counts ");
  v.why << "(" << one.overall.total << " scenarios, 1/4/8 workers)";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 steam end-to-end repair", steam},
      {"2 suite pass rate", pass_rate},
      {"3 repair soundness", soundness},
      {"4 minimality oracle", minimality},
      {"5 inference oracle", inference},
      {"6 normalization round trip and convergence", normalization},
      {"7 outcome classification", classification},
      {"8 patch locality", locality},
      {"9 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.why << "exception: " << e.what();
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << " " << v.why.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
