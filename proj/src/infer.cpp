#include "infrafix/infer.hpp"

#include <charconv>
#include <utility>

#include "infrafix/error.hpp"
#include "infrafix/normalize.hpp"

namespace infrafix {

std::optional<long long> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string_view digits = s.front() == '-' ? s.substr(1) : s;
  if (digits.empty() || (digits.size() > 1 && digits.front() == '0')) return std::nullopt;
  if (s.front() == '-' && digits == "0") return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Value eval_expression(const Expr& expr, const EvalEnv& env) {
  switch (expr.kind) {
    case ExprKind::String:
    case ExprKind::Int:
    case ExprKind::Bool:
    case ExprKind::Null:
      return literal_rendering(expr);
    case ExprKind::VarRef: {
      auto it = env.bindings.find(expr.text);
      if (it == env.bindings.end()) return std::nullopt;
      return it->second;
    }
    case ExprKind::Concat: {
      Value l = eval_expression(expr.lhs(), env);
      Value r = eval_expression(expr.rhs(), env);
      if (!l || !r) return std::nullopt;
      return *l + *r;
    }
    case ExprKind::Sum: {
      Value l = eval_expression(expr.lhs(), env);
      Value r = eval_expression(expr.rhs(), env);
      if (!l || !r) return std::nullopt;
      auto a = parse_integer(*l);
      auto b = parse_integer(*r);
      long long sum = 0;
      if (!a || !b || __builtin_add_overflow(*a, *b, &sum)) return std::nullopt;
      return std::to_string(sum);
    }
    case ExprKind::Equals:
    case ExprKind::NotEquals: {
      Value l = eval_expression(expr.lhs(), env);
      Value r = eval_expression(expr.rhs(), env);
      if (!l || !r) return std::nullopt;
      bool eq = *l == *r;
      return (expr.kind == ExprKind::Equals ? eq : !eq) ? "true" : "false";
    }
  }
  return std::nullopt;
}

Value evaluate_attribute(const IRScript& script, const Resource& resource, const Attribute& attr,
                         const EvalEnv& env) {
  Value v = eval_expression(attr.value, env);
  if (v && script.db) return script.db->value(script.tech, resource.type, attr.name, *v);
  return v;
}

ResourceIdentity resource_identity(const IRScript& script, const Resource& resource,
                                   const EvalEnv& env) {
  const CanonicalModel& model = CanonicalModel::builtin();
  const std::string id_attr = model.identifying_attr(resource.type);
  Value ident;
  bool have_source = false;
  if (!id_attr.empty()) {
    if (const Attribute* a = resource.find(id_attr); a && a->value.kind != ExprKind::Null) {
      ident = evaluate_attribute(script, resource, *a, env);
      have_source = true;
    }
  }
  if (!have_source && resource.title.kind != ExprKind::Null) {
    ident = eval_expression(resource.title, env);
    have_source = true;
  }
  if (!have_source) {
    return {model.supported(resource.type) ? IdStatus::Unknown : IdStatus::Anonymous, {}};
  }
  if (!ident || ident->empty()) return {IdStatus::Unknown, {}};
  return {IdStatus::Known, resource.type + ":" + *ident};
}

namespace {

struct Frame {
  const std::vector<Statement>* stmts;
  std::size_t next;
};

struct Path {
  EvalEnv env;
  std::vector<Frame> frames;
  SystemState state;
};

class Interpreter {
 public:
  Interpreter(const IRScript& script, std::size_t cap) : script_(script), cap_(cap) {}

  std::vector<InferredState> run() {
    Path start;
    start.frames.push_back({&script_.statements, 0});
    explore(std::move(start));
    return std::move(out_);
  }

 private:
  void explore(Path p) {
    while (!p.frames.empty()) {
      Frame& top = p.frames.back();
      if (top.next >= top.stmts->size()) {
        p.frames.pop_back();
        continue;
      }
      const Statement& stmt = (*top.stmts)[top.next++];
      if (const auto* res = std::get_if<Resource>(&stmt.node)) {
        declare(p, *res);
      } else if (const auto* assign = std::get_if<Assignment>(&stmt.node)) {
        p.env.bindings[assign->name] = eval_expression(assign->value, p.env);
      } else {
        const auto& cond = std::get<Conditional>(stmt.node);
        Value outcome = eval_expression(cond.condition, p.env);
        if (!outcome) {
          Path other = p;
          take(other, cond, Branch::Then);
          explore(std::move(other));
          take(p, cond, Branch::Else);
        } else {
          take(p, cond, *outcome == "true" ? Branch::Then : Branch::Else);
        }
      }
    }
    finish(std::move(p));
  }

  static void take(Path& p, const Conditional& cond, Branch b) {
    p.env.branch_decisions.emplace_back(cond.id, b);
    p.frames.push_back({b == Branch::Then ? &cond.then_branch : &cond.else_branch, 0});
  }

  void declare(Path& p, const Resource& res) {
    ResourceIdentity ident = resource_identity(script_, res, p.env);
    if (ident.status == IdStatus::Anonymous) return;
    if (ident.status == IdStatus::Unknown) {
      throw InferenceError("cannot determine the identifier of " + res.type + " resource at line " +
                           std::to_string(res.span.start_line));
    }
    const std::string id_attr = CanonicalModel::builtin().identifying_attr(res.type);
    std::map<std::string, std::string> attrs;
    for (const auto& a : res.attributes) {
      if (a.value.kind == ExprKind::Null || (!id_attr.empty() && a.name == id_attr)) continue;
      Value v = evaluate_attribute(script_, res, a, p.env);
      attrs[a.name] = v ? *v : std::string(kUnknownValue);
    }
    if (ResourceState* existing = p.state.find(ident.id)) {
      for (auto& [k, v] : attrs) existing->attributes[k] = std::move(v);
    } else if (!attrs.empty()) {
      p.state.resources.push_back({ident.id, std::move(attrs)});
    }
  }

  void finish(Path p) {
    if (++paths_ > cap_) {
      throw CapacityError("more than " + std::to_string(cap_) + " branch combinations");
    }
    for (const auto& seen : out_) {
      if (seen.state == p.state) return;
    }
    out_.push_back({std::move(p.state), std::move(p.env.branch_decisions)});
  }

  const IRScript& script_;
  std::size_t cap_;
  std::size_t paths_ = 0;
  std::vector<InferredState> out_;
};

}  // namespace

std::vector<InferredState> infer_states(const IRScript& script, std::size_t branch_cap) {
  return Interpreter(script, branch_cap).run();
}

}  // namespace infrafix
