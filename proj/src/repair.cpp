#include "infrafix/repair.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <memory>
#include <set>

#include "infrafix/error.hpp"
#include "infrafix/normalize.hpp"

namespace infrafix {

std::string_view site_kind_name(SiteKind kind) {
  switch (kind) {
    case SiteKind::AttributeValue: return "attribute-value";
    case SiteKind::VariableLiteral: return "variable-literal";
    case SiteKind::ConditionLiteral: return "condition-literal";
    case SiteKind::MissingAttribute: return "missing-attribute";
    case SiteKind::MissingResource: return "missing-resource";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

// Evaluation environment that also remembers where each variable was defined,
// so equations on a variable can be pushed into its defining expression.
struct SymEnv;
using EnvPtr = std::shared_ptr<const SymEnv>;

struct Definition {
  const Expr* expr = nullptr;
  EnvPtr env;  // environment the definition was evaluated in
};

struct SymEnv {
  EvalEnv plain;
  std::map<std::string, Definition, std::less<>> defs;
};

const NormalizationDb& empty_db() {
  static const NormalizationDb db;
  return db;
}

const NormalizationDb& db_of(const IRScript& script) { return script.db ? *script.db : empty_db(); }

std::string denormalize_value(const IRScript& script, const std::string& type, const std::string& attr,
                              const std::string& canonical) {
  return db_of(script).denormalize(canonical, NormalizationScope{script.tech, type, attr});
}

bool in_closed_set(const std::string& type, const std::string& attr, const std::string& value) {
  const auto* closed = CanonicalModel::builtin().closed_values(type, attr);
  return !closed || std::find(closed->begin(), closed->end(), value) != closed->end();
}

struct Atom {
  enum class Target { Node, NewAttr, NewResource };
  Target target = Target::Node;
  int node = -1;
  Edit edit;

  std::string key() const {
    switch (target) {
      case Target::Node:
        return "n:" + std::to_string(node);
      case Target::NewAttr:
        return "a:" +
               (edit.site.resource_index >= 0 ? "#" + std::to_string(edit.site.resource_index)
                                              : edit.site.resource_id) +
               ":" + edit.site.attribute;
      case Target::NewResource:
        return "r:" + edit.site.resource_id;
    }
    return {};
  }
};

struct Alternative {
  std::vector<Atom> atoms;
  std::vector<int> pins;  // literal leaves whose value must not change
};

struct Requirement {
  bool satisfied = false;
  std::vector<Alternative> alts;      // satisfied: the single pin-only alternative
  std::vector<Alternative> fallback;  // satisfied: used only when the pins conflict
};

struct Instance {
  const Resource* res;
  EnvPtr env;
  std::string id;
};

struct CondStep {
  const Conditional* cond;
  EnvPtr env;
  bool flipped;
  Branch taken;
};

struct Walk {
  EnvPtr env;
  std::vector<std::pair<const std::vector<Statement>*, std::size_t>> frames;
  std::vector<Instance> instances;
  std::vector<CondStep> conds;
  BranchPath decisions;
  int flips = 0;
};

struct PathPlan {
  std::vector<Requirement> reqs;
  int flips = 0;
};

struct Candidate {
  std::vector<Atom> atoms;  // sorted by key
  int cost = 0;
  std::size_t first_byte = std::numeric_limits<std::size_t>::max();
  std::string signature;
};

struct Partial {
  std::map<std::string, const Atom*> atoms;
  std::set<int> pins;
  int cost = 0;
};

constexpr std::size_t kMaxRepairPaths = 4096;

class Engine {
 public:
  Engine(const IRScript& script, const SystemState& desired, const RepairConfig& cfg)
      : script_(script), desired_(desired), cfg_(cfg), deadline_(deadline_for(cfg.timeout_seconds)) {
    visit_exprs(script_, [&](const Expr& e, const Expr* parent) {
      if (parent) parent_[e.id] = parent->id;
    });
  }

  RepairResult run() {
    RepairResult result;
    enumerate();
    int stop_level = cfg_.max_cost;
    for (int bound = 0; bound <= std::min(stop_level, cfg_.max_cost); ++bound) {
      if (expired()) break;
      std::vector<Candidate> level;
      std::set<std::string> seen;
      for (const auto& plan : plans_) {
        if (plan.flips > bound) continue;
        Partial st;
        dfs(plan, 0, st, bound, level, seen);
        if (timed_out_) break;
      }
      if (timed_out_) break;
      std::sort(level.begin(), level.end(), [](const Candidate& a, const Candidate& b) {
        if (a.first_byte != b.first_byte) return a.first_byte < b.first_byte;
        return a.signature < b.signature;
      });
      for (const auto& cand : level) {
        if (expired()) break;
        if (redundant(cand)) continue;
        ++candidates_tried_;
        std::vector<Edit> edits;
        for (const auto& a : cand.atoms) edits.push_back(a.edit);
        RepairSolution sol{edits, cand.cost, {}};
        if (auto decisions = verified_decisions(edits)) {
          sol.branch_decisions = std::move(*decisions);
          accepted_.push_back(cand);
          result.solutions.push_back(std::move(sol));
          if (result.solutions.size() >= cfg_.max_solutions) break;
        }
      }
      if (timed_out_ || result.solutions.size() >= cfg_.max_solutions) break;
      if (!result.solutions.empty()) stop_level = std::min(stop_level, bound + 1);
    }
    result.timed_out = timed_out_;
    if (result.solutions.empty() && !timed_out_) classify(result);
    return result;
  }

 private:
  static Clock::time_point deadline_for(double seconds) {
    if (seconds <= 0) return Clock::now();
    auto d = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    return Clock::now() + d;
  }

  bool expired() {
    if (!timed_out_ && Clock::now() >= deadline_) timed_out_ = true;
    return timed_out_;
  }

  // ---- path enumeration --------------------------------------------------

  void enumerate() {
    Walk start;
    start.env = std::make_shared<SymEnv>();
    start.frames.emplace_back(&script_.statements, 0);
    walk(std::move(start));
  }

  void walk(Walk w) {
    while (!w.frames.empty()) {
      auto& [stmts, next] = w.frames.back();
      if (next >= stmts->size()) {
        w.frames.pop_back();
        continue;
      }
      const Statement& stmt = (*stmts)[next++];
      if (const auto* res = std::get_if<Resource>(&stmt.node)) {
        ResourceIdentity ident = resource_identity(script_, *res, w.env->plain);
        if (ident.status == IdStatus::Known) w.instances.push_back({res, w.env, ident.id});
      } else if (const auto* assign = std::get_if<Assignment>(&stmt.node)) {
        auto env = std::make_shared<SymEnv>(*w.env);
        env->plain.bindings[assign->name] = eval_expression(assign->value, w.env->plain);
        env->defs[assign->name] = Definition{&assign->value, w.env};
        w.env = std::move(env);
      } else {
        const auto& cond = std::get<Conditional>(stmt.node);
        Value outcome = eval_expression(cond.condition, w.env->plain);
        if (!outcome) {
          Walk other = w;
          take(other, cond, Branch::Then, false);
          walk(std::move(other));
          take(w, cond, Branch::Else, false);
        } else {
          Branch natural = *outcome == "true" ? Branch::Then : Branch::Else;
          if (w.flips < cfg_.max_cost) {
            Walk other = w;
            take(other, cond, natural == Branch::Then ? Branch::Else : Branch::Then, true);
            walk(std::move(other));
          }
          take(w, cond, natural, false);
        }
      }
    }
    if (++paths_ > kMaxRepairPaths) {
      throw CapacityError("repair search exceeds " + std::to_string(kMaxRepairPaths) + " branch paths");
    }
    plan(w);
  }

  static void take(Walk& w, const Conditional& cond, Branch b, bool flipped) {
    w.decisions.emplace_back(cond.id, b);
    w.conds.push_back({&cond, w.env, flipped, b});
    if (flipped) ++w.flips;
    w.frames.emplace_back(b == Branch::Then ? &cond.then_branch : &cond.else_branch, 0);
  }

  // ---- requirement construction -----------------------------------------

  void plan(const Walk& w) {
    PathPlan plan;
    plan.flips = w.flips;
    std::vector<Requirement> flips, open, done;
    for (const auto& step : w.conds) {
      if (!step.flipped) continue;
      Requirement r;
      flip_alternatives(step, r.alts);
      if (r.alts.empty()) return note("no-candidate", "condition cannot be flipped");
      flips.push_back(std::move(r));
    }
    for (const auto& want : desired_.resources) {
      std::vector<const Instance*> matches;
      for (const auto& inst : w.instances) {
        if (inst.id == want.id) matches.push_back(&inst);
      }
      if (matches.empty()) {
        Requirement r;
        if (!insertion(want, r)) return;
        open.push_back(std::move(r));
        continue;
      }
      const std::string id_attr = CanonicalModel::builtin().identifying_attr(want.type());
      for (const auto& [attr, value] : want.attributes) {
        if (attr == id_attr) continue;
        Requirement r;
        if (!attribute_requirement(matches, want.id, attr, value, r)) return;
        (r.satisfied ? done : open).push_back(std::move(r));
      }
    }
    for (auto* group : {&flips, &open, &done}) {
      for (auto& r : *group) plan.reqs.push_back(std::move(r));
    }
    plans_.push_back(std::move(plan));
  }

  void note(const std::string& cls, const std::string& detail) {
    if (!reasons_.count(cls)) reasons_[cls] = detail;
  }

  bool insertion(const ResourceState& want, Requirement& r) {
    const std::string type = want.type();
    const CanonicalModel& model = CanonicalModel::builtin();
    if (!cfg_.allow_resource_insertion || !model.supported(type) || !script_.resource_slot.available) {
      note("missing-resource", want.id + " is not declared by the script");
      return false;
    }
    const std::string id_attr = model.identifying_attr(type);
    Alternative alt;
    Atom res;
    res.target = Atom::Target::NewResource;
    res.edit.site.kind = SiteKind::MissingResource;
    res.edit.site.type = type;
    res.edit.site.resource_id = want.id;
    res.edit.new_value = want.identifier();
    res.edit.raw_value = want.identifier();
    alt.atoms.push_back(res);
    for (const auto& [attr, value] : want.attributes) {
      if (attr == id_attr) continue;
      if (!model.attribute(type, attr) || !in_closed_set(type, attr, value)) {
        note("missing-resource", want.id + " cannot be inserted with attribute " + attr + "=" + value);
        return false;
      }
      Atom a;
      a.target = Atom::Target::NewAttr;
      a.edit.site.kind = SiteKind::MissingAttribute;
      a.edit.site.type = type;
      a.edit.site.resource_id = want.id;
      a.edit.site.attribute = attr;
      a.edit.new_value = value;
      a.edit.raw_value = denormalize_value(script_, type, attr, value);
      alt.atoms.push_back(std::move(a));
    }
    if (alt.atoms.size() == 1) {
      note("missing-resource", want.id + " has no attributes to insert");
      return false;
    }
    r.alts.push_back(std::move(alt));
    return true;
  }

  bool attribute_requirement(const std::vector<const Instance*>& matches, const std::string& id,
                             const std::string& attr, const std::string& value, Requirement& r) {
    const Instance* source = nullptr;
    const Attribute* source_attr = nullptr;
    const Attribute* null_attr = nullptr;
    const Instance* null_inst = nullptr;
    for (const Instance* inst : matches) {
      if (const Attribute* a = inst->res->find(attr)) {
        if (a->value.kind == ExprKind::Null) {
          null_attr = a;
          null_inst = inst;
        } else {
          source = inst;
          source_attr = a;
        }
      }
    }
    const Resource& last = *matches.back()->res;
    const std::string& type = last.type;
    const bool closed_ok = in_closed_set(type, attr, value);

    if (!source_attr && null_attr) {
      source = null_inst;
      source_attr = null_attr;
    }
    if (!source_attr) {
      if (!CanonicalModel::builtin().attribute(type, attr) || !closed_ok ||
          last.slot.insert_at == Span::kNoOffset) {
        note("no-candidate", id + " cannot carry attribute " + attr + "=" + value);
        return false;
      }
      Atom a;
      a.target = Atom::Target::NewAttr;
      a.edit.site.kind = SiteKind::MissingAttribute;
      a.edit.site.type = type;
      a.edit.site.resource_id = id;
      a.edit.site.attribute = attr;
      a.edit.site.resource_index = last.index;
      a.edit.new_value = value;
      a.edit.raw_value = denormalize_value(script_, type, attr, value);
      r.alts.push_back({{std::move(a)}, {}});
      return true;
    }

    const Expr& root = source_attr->value;
    const SymEnv& env = *source->env;
    SiteCtx ctx{SiteKind::AttributeValue, type, id, attr, "", -1, source->res->index};
    Value current = source_attr->value.kind == ExprKind::Null
                        ? Value{}
                        : evaluate_attribute(script_, *source->res, *source_attr, env.plain);
    if (current && *current == value) {
      r.satisfied = true;
      Alternative pin;
      collect_pins(root, env, pin.pins);
      r.alts.push_back(std::move(pin));
      if (!root.is_literal() && cfg_.allow_expression_replacement) {
        r.fallback.push_back({{node_atom(root, ctx, denormalize_value(script_, type, attr, value), value)}, {}});
      }
      return true;
    }
    if (!closed_ok) {
      note("no-candidate", value + " is not a valid " + type + "." + attr + " value");
      return false;
    }
    const std::string raw = denormalize_value(script_, type, attr, value);
    bool undefined = false;
    solve(root, env, raw, ctx, r.alts, undefined);
    if (!root.is_literal() && cfg_.allow_expression_replacement) {
      r.alts.push_back({{node_atom(root, ctx, raw, value)}, {}});
    }
    for (auto& alt : r.alts) {
      for (auto& a : alt.atoms) {
        if (a.node == root.id) a.edit.new_value = value;
      }
    }
    dedupe(r.alts);
    if (r.alts.empty()) {
      if (undefined) {
        note("undefined-variable", id + "." + attr + " is fed by an undefined variable");
      } else {
        note("no-candidate", id + "." + attr + " has no editable source for " + value);
      }
      return false;
    }
    return true;
  }

  struct SiteCtx {
    SiteKind kind;
    std::string type;
    std::string resource_id;
    std::string attribute;
    std::string variable;
    int conditional;
    int resource_index;
  };

  Atom node_atom(const Expr& node, const SiteCtx& ctx, const std::string& raw, const std::string& canonical) {
    Atom a;
    a.target = Atom::Target::Node;
    a.node = node.id;
    a.edit.site.kind = ctx.kind;
    a.edit.site.type = ctx.type;
    a.edit.site.resource_id = ctx.resource_id;
    a.edit.site.attribute = ctx.attribute;
    a.edit.site.variable = ctx.variable;
    a.edit.site.conditional = ctx.conditional;
    a.edit.site.resource_index = ctx.resource_index;
    a.edit.site.expr_id = node.id;
    a.edit.site.span = node.span;
    a.edit.new_value = canonical;
    a.edit.raw_value = raw;
    return a;
  }

  void collect_pins(const Expr& e, const SymEnv& env, std::vector<int>& pins) {
    if (e.is_literal()) {
      pins.push_back(e.id);
      return;
    }
    if (e.kind == ExprKind::VarRef) {
      auto it = env.defs.find(e.text);
      if (it != env.defs.end()) collect_pins(*it->second.expr, *it->second.env, pins);
      return;
    }
    for (const auto& op : e.operands) collect_pins(op, env, pins);
  }

  // Alternatives (single edits plus the pins they rely on) that make `e`
  // evaluate to `target` under `env`.
  void solve(const Expr& e, const SymEnv& env, const std::string& target, const SiteCtx& ctx,
             std::vector<Alternative>& out, bool& undefined) {
    Value current = eval_expression(e, env.plain);
    if (current && *current == target) {
      Alternative keep;
      collect_pins(e, env, keep.pins);
      out.push_back(std::move(keep));
      return;
    }
    switch (e.kind) {
      case ExprKind::String:
      case ExprKind::Int:
      case ExprKind::Bool:
      case ExprKind::Null:
        out.push_back({{node_atom(e, ctx, target, target)}, {}});
        return;
      case ExprKind::VarRef: {
        auto it = env.defs.find(e.text);
        if (it == env.defs.end()) {
          undefined = true;
          return;
        }
        SiteCtx inner = ctx;
        inner.kind = SiteKind::VariableLiteral;
        inner.variable = e.text;
        const Definition& def = it->second;
        solve(*def.expr, *def.env, target, inner, out, undefined);
        if (!def.expr->is_literal() && cfg_.allow_expression_replacement) {
          out.push_back({{node_atom(*def.expr, inner, target, target)}, {}});
        }
        return;
      }
      case ExprKind::Concat: {
        Value l = eval_expression(e.lhs(), env.plain);
        Value r = eval_expression(e.rhs(), env.plain);
        if (l && target.size() >= l->size() && target.compare(0, l->size(), *l) == 0) {
          side(e.rhs(), e.lhs(), env, target.substr(l->size()), ctx, out, undefined);
        }
        if (r && target.size() >= r->size() &&
            target.compare(target.size() - r->size(), r->size(), *r) == 0) {
          side(e.lhs(), e.rhs(), env, target.substr(0, target.size() - r->size()), ctx, out, undefined);
        }
        return;
      }
      case ExprKind::Sum: {
        auto t = parse_integer(target);
        if (!t) return;
        Value l = eval_expression(e.lhs(), env.plain);
        Value r = eval_expression(e.rhs(), env.plain);
        long long part = 0;
        if (auto lv = l ? parse_integer(*l) : std::nullopt; lv && !__builtin_sub_overflow(*t, *lv, &part)) {
          side(e.rhs(), e.lhs(), env, std::to_string(part), ctx, out, undefined);
        }
        if (auto rv = r ? parse_integer(*r) : std::nullopt; rv && !__builtin_sub_overflow(*t, *rv, &part)) {
          side(e.lhs(), e.rhs(), env, std::to_string(part), ctx, out, undefined);
        }
        return;
      }
      case ExprKind::Equals:
      case ExprKind::NotEquals:
        return;
    }
  }

  // Solves `edited` for `target` while `kept` must keep its value.
  void side(const Expr& edited, const Expr& kept, const SymEnv& env, const std::string& target,
            const SiteCtx& ctx, std::vector<Alternative>& out, bool& undefined) {
    std::vector<Alternative> sub;
    solve(edited, env, target, ctx, sub, undefined);
    std::vector<int> keep;
    collect_pins(kept, env, keep);
    for (auto& alt : sub) {
      alt.pins.insert(alt.pins.end(), keep.begin(), keep.end());
      out.push_back(std::move(alt));
    }
  }

  void flip_alternatives(const CondStep& step, std::vector<Alternative>& out) {
    const Expr& c = step.cond->condition;
    if (c.kind != ExprKind::Equals && c.kind != ExprKind::NotEquals) return;
    const SymEnv& env = *step.env;
    Value l = eval_expression(c.lhs(), env.plain);
    Value r = eval_expression(c.rhs(), env.plain);
    if (!l || !r) return;
    bool want_true = step.taken == Branch::Then;
    bool want_equal = (c.kind == ExprKind::Equals) == want_true;
    SiteCtx ctx{SiteKind::ConditionLiteral, "", "", "", "", step.cond->id, -1};
    bool undefined = false;
    if (want_equal) {
      side(c.lhs(), c.rhs(), env, *r, ctx, out, undefined);
      side(c.rhs(), c.lhs(), env, *l, ctx, out, undefined);
    } else {
      side(c.lhs(), c.rhs(), env, "not-" + *r, ctx, out, undefined);
      side(c.rhs(), c.lhs(), env, "not-" + *l, ctx, out, undefined);
    }
    dedupe(out);
  }

  static void dedupe(std::vector<Alternative>& alts) {
    std::set<std::string> seen;
    std::vector<Alternative> kept;
    for (auto& alt : alts) {
      std::string sig;
      for (const auto& a : alt.atoms) sig += a.key() + "=" + a.edit.raw_value + ";";
      if (alt.atoms.empty()) sig = "keep";
      if (seen.insert(sig).second) kept.push_back(std::move(alt));
    }
    alts = std::move(kept);
  }

  // ---- bounded search ----------------------------------------------------

  bool is_ancestor(int a, int b) const {
    for (auto it = parent_.find(b); it != parent_.end(); it = parent_.find(it->second)) {
      if (it->second == a) return true;
    }
    return false;
  }

  bool fits(const Alternative& alt, Partial& st) {
    for (const auto& a : alt.atoms) {
      auto it = st.atoms.find(a.key());
      if (it != st.atoms.end()) {
        if (it->second->edit.raw_value != a.edit.raw_value) {
          if (a.edit.site.kind == SiteKind::VariableLiteral) shared_conflict_ = true;
          return false;
        }
        continue;
      }
      if (a.target == Atom::Target::Node) {
        if (st.pins.count(a.node)) {
          if (a.edit.site.kind == SiteKind::VariableLiteral) shared_conflict_ = true;
          return false;
        }
        for (int p : st.pins) {
          if (is_ancestor(a.node, p)) return false;
        }
        for (const auto& [key, other] : st.atoms) {
          if (other->target != Atom::Target::Node) continue;
          if (is_ancestor(a.node, other->node) || is_ancestor(other->node, a.node)) return false;
        }
      }
      st.atoms.emplace(a.key(), &a);
      ++st.cost;
    }
    for (int p : alt.pins) {
      for (const auto& [key, other] : st.atoms) {
        if (other->target != Atom::Target::Node) continue;
        if (other->node == p || is_ancestor(other->node, p)) {
          if (other->edit.site.kind == SiteKind::VariableLiteral) shared_conflict_ = true;
          return false;
        }
      }
      st.pins.insert(p);
    }
    return true;
  }

  void dfs(const PathPlan& plan, std::size_t i, const Partial& st, int bound, std::vector<Candidate>& out,
           std::set<std::string>& seen) {
    if ((++steps_ & 0xff) == 0 && expired()) return;
    if (timed_out_) return;
    if (st.cost > bound) {
      if (bound == cfg_.max_cost) bound_pruned_ = true;
      return;
    }
    if (i == plan.reqs.size()) {
      if (st.cost == bound) emit(st, out, seen);
      return;
    }
    const Requirement& req = plan.reqs[i];
    bool any = false;
    for (const auto& alt : req.alts) {
      Partial next = st;
      if (!fits(alt, next)) continue;
      any = true;
      dfs(plan, i + 1, next, bound, out, seen);
    }
    if (req.satisfied && !any) {
      for (const auto& alt : req.fallback) {
        Partial next = st;
        if (fits(alt, next)) dfs(plan, i + 1, next, bound, out, seen);
      }
    }
  }

  void emit(const Partial& st, std::vector<Candidate>& out, std::set<std::string>& seen) {
    Candidate c;
    c.cost = st.cost;
    for (const auto& [key, atom] : st.atoms) {
      c.atoms.push_back(*atom);
      c.signature += key + "=" + atom->edit.raw_value + ";";
      if (atom->target == Atom::Target::Node) {
        c.first_byte = std::min(c.first_byte, atom->edit.site.span.byte_start);
      }
    }
    if (!seen.insert(c.signature).second) return;
    // Inserted resources sort their attributes after the resource itself.
    std::stable_sort(c.atoms.begin(), c.atoms.end(), [](const Atom& a, const Atom& b) {
      auto rank = [](const Atom& x) {
        if (x.target == Atom::Target::Node) return 0;
        if (x.edit.site.resource_index >= 0) return 1;
        return 2;
      };
      if (rank(a) != rank(b)) return rank(a) < rank(b);
      if (rank(a) == 0) return a.edit.site.span.byte_start < b.edit.site.span.byte_start;
      if (a.edit.site.resource_id != b.edit.site.resource_id) return a.edit.site.resource_id < b.edit.site.resource_id;
      return (a.target == Atom::Target::NewResource) > (b.target == Atom::Target::NewResource);
    });
    out.push_back(std::move(c));
  }

  bool redundant(const Candidate& cand) const {
    for (const auto& prev : accepted_) {
      bool subset = std::all_of(prev.atoms.begin(), prev.atoms.end(), [&](const Atom& a) {
        return std::any_of(cand.atoms.begin(), cand.atoms.end(), [&](const Atom& b) {
          return a.key() == b.key() && a.edit.raw_value == b.edit.raw_value;
        });
      });
      if (subset) return true;
    }
    return false;
  }

  std::optional<BranchPath> verified_decisions(const std::vector<Edit>& edits) {
    try {
      IRScript patched = apply_edits(script_, edits);
      for (const auto& st : infer_states(patched, cfg_.branch_cap)) {
        if (satisfies(st.state, desired_)) return st.branch_decisions;
      }
    } catch (const InferenceError&) {
    } catch (const CapacityError&) {
    }
    return std::nullopt;
  }

  void classify(RepairResult& result) const {
    auto pick = [&](const char* cls) {
      auto it = reasons_.find(cls);
      if (it == reasons_.end()) return false;
      result.failure_class = cls;
      result.failure_detail = it->second;
      return true;
    };
    if (candidates_tried_ > 0) {
      result.failure_class = "no-candidate";
      result.failure_detail = "no candidate edit set survived re-verification";
      return;
    }
    if (pick("undefined-variable")) return;
    if (shared_conflict_) {
      result.failure_class = "shared-variable-conflict";
      result.failure_detail = "attributes sharing a variable need incompatible values";
      return;
    }
    if (pick("missing-resource")) return;
    if (bound_pruned_) {
      result.failure_class = "cost-bound";
      result.failure_detail = "every repair needs more than " + std::to_string(cfg_.max_cost) + " edits";
      return;
    }
    if (!pick("no-candidate")) {
      result.failure_class = "no-candidate";
      result.failure_detail = "no edit set satisfies the desired state";
    }
  }

  const IRScript& script_;
  const SystemState& desired_;
  const RepairConfig& cfg_;
  Clock::time_point deadline_;
  std::map<int, int> parent_;
  std::vector<PathPlan> plans_;
  std::vector<Candidate> accepted_;
  std::map<std::string, std::string> reasons_;
  std::size_t paths_ = 0;
  std::size_t steps_ = 0;
  std::size_t candidates_tried_ = 0;
  bool timed_out_ = false;
  bool shared_conflict_ = false;
  bool bound_pruned_ = false;
};

// Best-effort identifier for site listings: assignments are applied in source
// order regardless of branches.
std::string static_id(const IRScript& script, const Resource& res, const EvalEnv& env) {
  ResourceIdentity ident = resource_identity(script, res, env);
  if (ident.status == IdStatus::Known) return ident.id;
  return res.type + ":#" + std::to_string(res.index);
}

void sites_in(const IRScript& script, const std::vector<Statement>& stmts, EvalEnv& env,
              std::vector<EditSite>& out) {
  const CanonicalModel& model = CanonicalModel::builtin();
  for (const auto& stmt : stmts) {
    if (const auto* res = std::get_if<Resource>(&stmt.node)) {
      const CanonicalType* type = model.find(res->type);
      if (!type) continue;
      const std::string id = static_id(script, *res, env);
      for (const auto& attr : res->attributes) {
        EditSite s;
        s.kind = SiteKind::AttributeValue;
        s.type = res->type;
        s.resource_id = id;
        s.attribute = attr.name;
        s.expr_id = attr.value.id;
        s.resource_index = res->index;
        s.span = attr.value.span;
        out.push_back(std::move(s));
      }
      for (const auto& canon : type->attributes) {
        if (canon.name == type->identifying_attr || res->find(canon.name)) continue;
        EditSite s;
        s.kind = SiteKind::MissingAttribute;
        s.type = res->type;
        s.resource_id = id;
        s.attribute = canon.name;
        s.resource_index = res->index;
        out.push_back(std::move(s));
      }
    } else if (const auto* assign = std::get_if<Assignment>(&stmt.node)) {
      if (!literal_leaves(assign->value).empty()) {
        EditSite s;
        s.kind = SiteKind::VariableLiteral;
        s.variable = assign->name;
        s.expr_id = assign->value.id;
        s.span = assign->value.span;
        out.push_back(std::move(s));
      }
      env.bindings[assign->name] = eval_expression(assign->value, env);
    } else {
      const auto& cond = std::get<Conditional>(stmt.node);
      for (const Expr* leaf : literal_leaves(cond.condition)) {
        EditSite s;
        s.kind = SiteKind::ConditionLiteral;
        s.conditional = cond.id;
        s.expr_id = leaf->id;
        s.span = leaf->span;
        out.push_back(std::move(s));
      }
      sites_in(script, cond.then_branch, env, out);
      sites_in(script, cond.else_branch, env, out);
    }
  }
}

Resource* find_resource(std::vector<Statement>& stmts, int index) {
  for (auto& stmt : stmts) {
    if (auto* res = std::get_if<Resource>(&stmt.node)) {
      if (res->index == index) return res;
    } else if (auto* cond = std::get_if<Conditional>(&stmt.node)) {
      if (auto* r = find_resource(cond->then_branch, index)) return r;
      if (auto* r = find_resource(cond->else_branch, index)) return r;
    }
  }
  return nullptr;
}

int max_resource_index(const IRScript& script) {
  int m = -1;
  for (const auto& ref : iter_resources(script)) m = std::max(m, ref.resource->index);
  return m;
}

}  // namespace

std::vector<EditSite> collect_sites(const IRScript& script) {
  std::vector<EditSite> out;
  EvalEnv env;
  sites_in(script, script.statements, env, out);
  return out;
}

RepairResult repair(const IRScript& script, const SystemState& desired, const RepairConfig& cfg) {
  if (cfg.max_solutions == 0 || cfg.max_cost < 0 || !(cfg.timeout_seconds >= 0)) {
    throw EngineError("invalid repair configuration");
  }
  if (!script.normalized) throw EngineError("repair needs a normalized script");
  // Surfaces inference failures of the original script before searching.
  infer_states(script, cfg.branch_cap);
  return Engine(script, desired, cfg).run();
}

IRScript apply_edits(const IRScript& script, const std::vector<Edit>& edits) {
  IRScript out = script;
  std::map<int, const Edit*> by_node;
  for (const auto& e : edits) {
    if (e.site.existing()) {
      if (e.site.expr_id < 0) throw EngineError("edit on an existing site without a node id");
      by_node[e.site.expr_id] = &e;
    }
  }
  std::size_t applied = 0;
  visit_exprs_mut(out, [&](Expr& node) {
    auto it = by_node.find(node.id);
    if (it == by_node.end()) return;
    Expr lit = Expr::string(it->second->raw_value, node.span, node.quote);
    lit.id = node.id;
    lit.embedded = node.embedded;
    lit.host_quote = node.host_quote;
    node = std::move(lit);
    ++applied;
  });
  if (applied != by_node.size()) throw EngineError("edit refers to an expression that does not exist");

  const CanonicalModel& model = CanonicalModel::builtin();
  int next_index = max_resource_index(out) + 1;
  std::map<std::string, std::size_t> inserted;  // resource id -> statement position
  for (const auto& e : edits) {
    if (e.site.kind != SiteKind::MissingResource) continue;
    Resource r;
    r.type = e.site.type;
    r.index = next_index++;
    r.span = Span::synthetic();
    const std::string identifier = e.raw_value;
    if (script.tech == Tech::Puppet) {
      r.title = Expr::string(identifier);
    } else {
      r.title = Expr::null();
      Attribute id{model.identifying_attr(r.type), Expr::string(identifier), Span::synthetic(), true};
      r.attributes.push_back(std::move(id));
    }
    inserted[e.site.resource_id] = out.statements.size();
    out.statements.push_back(Statement{std::move(r)});
  }
  for (const auto& e : edits) {
    if (e.site.kind != SiteKind::MissingAttribute) continue;
    Resource* target = nullptr;
    if (e.site.resource_index >= 0) {
      target = find_resource(out.statements, e.site.resource_index);
    } else if (auto it = inserted.find(e.site.resource_id); it != inserted.end()) {
      target = &std::get<Resource>(out.statements[it->second].node);
    }
    if (!target) throw EngineError("missing-attribute edit targets an unknown resource " + e.site.resource_id);
    Expr value = Expr::string(e.raw_value);
    value.synthetic = true;
    target->attributes.push_back({e.site.attribute, std::move(value), Span::synthetic(), true});
  }
  return out;
}

bool verify_solution(const IRScript& script, const RepairSolution& solution, const SystemState& desired,
                     std::size_t branch_cap) {
  try {
    IRScript patched = apply_edits(script, solution.edits);
    for (const auto& st : infer_states(patched, branch_cap)) {
      if (satisfies(st.state, desired)) return true;
    }
  } catch (const Error&) {
  }
  return false;
}

}  // namespace infrafix
