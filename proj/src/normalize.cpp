#include "infrafix/normalize.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "infrafix/error.hpp"

#ifndef INFRAFIX_DATA_DIR
#define INFRAFIX_DATA_DIR "data"
#endif

namespace infrafix {

const CanonicalModel& CanonicalModel::builtin() {
  static const CanonicalModel model = [] {
    CanonicalModel m;
    m.types_ = {
        {"file",
         "path",
         {{"path", {}},
          {"state", {"present", "absent", "directory", "link"}},
          {"owner", {}},
          {"group", {}},
          {"mode", {}},
          {"content", {}},
          {"target", {}}}},
        {"package", "name", {{"name", {}}, {"state", {"present", "absent", "latest"}}, {"version", {}}}},
        {"service",
         "name",
         {{"name", {}}, {"state", {"started", "stopped"}}, {"enabled", {"true", "false"}}}},
        {"user",
         "name",
         {{"name", {}},
          {"state", {"present", "absent"}},
          {"uid", {}},
          {"gid", {}},
          {"home", {}},
          {"shell", {}}}},
    };
    return m;
  }();
  return model;
}

const CanonicalType* CanonicalModel::find(std::string_view type) const {
  for (const auto& t : types_) {
    if (t.name == type) return &t;
  }
  return nullptr;
}

const CanonicalAttribute* CanonicalModel::attribute(std::string_view type, std::string_view attr) const {
  const CanonicalType* t = find(type);
  if (!t) return nullptr;
  for (const auto& a : t->attributes) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

const std::vector<std::string>* CanonicalModel::closed_values(std::string_view type,
                                                              std::string_view attr) const {
  const CanonicalAttribute* a = attribute(type, attr);
  if (!a || a->closed_values.empty()) return nullptr;
  return &a->closed_values;
}

std::string CanonicalModel::identifying_attr(std::string_view type) const {
  const CanonicalType* t = find(type);
  return t ? t->identifying_attr : std::string{};
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = line.find('|', start);
    out.push_back(trim(line.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return out;
}

template <typename Map>
std::string lookup(const Map& maps, const typename Map::key_type& key, std::string_view s) {
  auto scope = maps.find(key);
  if (scope == maps.end()) return std::string(s);
  auto it = scope->second.find(s);
  return it == scope->second.end() ? std::string(s) : it->second;
}

}  // namespace

NormalizationDb NormalizationDb::load(std::string_view text) {
  NormalizationDb db;
  const CanonicalModel& model = CanonicalModel::builtin();
  std::istringstream in{std::string(text)};
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = raw_line;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto where = [&](const std::string& why) {
      return LoadError("normalization db line " + std::to_string(line_no) + " `" + trim(raw_line) +
                       "`: " + why);
    };

    auto f = split_fields(line);
    if (f.size() != 5) throw where("expected 5 pipe-separated fields");
    for (const auto& field : f) {
      if (field.empty()) throw where("empty field");
    }
    NormalizationRule rule;
    auto tech = tech_from_name(f[0]);
    if (!tech) throw where("unknown technology '" + f[0] + "'");
    rule.tech = *tech;
    rule.type = f[1];
    rule.raw = f[3];
    rule.canonical = f[4];
    rule.line = line_no;
    const std::string& kind = f[2];
    if (kind == "type") {
      rule.kind = RuleKind::Type;
      if (rule.canonical != rule.type) throw where("type rule must map to its canonical_type column");
    } else if (kind == "attr") {
      rule.kind = RuleKind::Attr;
      if (model.supported(rule.type) && !model.attribute(rule.type, rule.canonical)) {
        throw where("attribute '" + rule.canonical + "' is not declared for type '" + rule.type + "'");
      }
    } else if (kind.rfind("value:", 0) == 0 && kind.size() > 6) {
      rule.kind = RuleKind::Value;
      rule.attribute = kind.substr(6);
      if (!model.attribute(rule.type, rule.attribute)) {
        throw where("value rule targets undeclared attribute '" + rule.type + "." + rule.attribute + "'");
      }
      if (const auto* closed = model.closed_values(rule.type, rule.attribute)) {
        if (std::find(closed->begin(), closed->end(), rule.canonical) == closed->end()) {
          throw where("'" + rule.canonical + "' is outside the closed value set of " + rule.type + "." +
                      rule.attribute);
        }
      }
    } else {
      throw where("unknown rule kind '" + kind + "'");
    }

    Key key{rule.tech, rule.kind, rule.kind == RuleKind::Type ? std::string{} : rule.type, rule.attribute};
    auto& fwd = db.forward_[key];
    auto& inv = db.inverse_[key];
    if (fwd.count(rule.raw)) throw where("duplicate rule for raw '" + rule.raw + "'");
    if (inv.count(rule.canonical)) {
      throw where("non-invertible: '" + rule.canonical + "' is already the image of '" +
                  inv.find(rule.canonical)->second + "'");
    }
    fwd.emplace(rule.raw, rule.canonical);
    inv.emplace(rule.canonical, rule.raw);
    db.rules_.push_back(std::move(rule));
  }

  // Normalization must be idempotent: no canonical image may itself be
  // rewritten by another rule of the same scope.
  for (const auto& rule : db.rules_) {
    if (rule.raw == rule.canonical) continue;
    Key key{rule.tech, rule.kind, rule.kind == RuleKind::Type ? std::string{} : rule.type, rule.attribute};
    const auto& fwd = db.forward_.at(key);
    auto it = fwd.find(rule.canonical);
    if (it != fwd.end() && it->second != rule.canonical) {
      throw LoadError("normalization db line " + std::to_string(rule.line) + ": chained rules '" +
                      rule.raw + "' -> '" + rule.canonical + "' -> '" + it->second + "'");
    }
  }
  return db;
}

NormalizationDb NormalizationDb::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open normalization db " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load(ss.str());
}

std::string NormalizationDb::type(Tech tech, std::string_view raw) const {
  return lookup(forward_, Key{tech, RuleKind::Type, "", ""}, raw);
}

std::string NormalizationDb::attribute(Tech tech, std::string_view type, std::string_view raw) const {
  return lookup(forward_, Key{tech, RuleKind::Attr, std::string(type), ""}, raw);
}

std::string NormalizationDb::value(Tech tech, std::string_view type, std::string_view attr,
                                   std::string_view raw) const {
  return lookup(forward_, Key{tech, RuleKind::Value, std::string(type), std::string(attr)}, raw);
}

std::string NormalizationDb::denormalize(std::string_view canonical, const NormalizationScope& scope) const {
  if (scope.attribute) {
    return lookup(inverse_, Key{scope.tech, RuleKind::Value, scope.type, *scope.attribute}, canonical);
  }
  return lookup(inverse_, Key{scope.tech, RuleKind::Attr, scope.type, ""}, canonical);
}

std::string NormalizationDb::denormalize_type(Tech tech, std::string_view canonical_type) const {
  return lookup(inverse_, Key{tech, RuleKind::Type, "", ""}, canonical_type);
}

std::string NormalizationDb::identifying_attr(std::string_view type) const {
  return CanonicalModel::builtin().identifying_attr(type);
}

IRScript normalize_script(const IRScript& script, std::shared_ptr<const NormalizationDb> db) {
  IRScript out = script;
  const Tech tech = script.tech;
  std::function<void(std::vector<Statement>&)> walk = [&](std::vector<Statement>& stmts) {
    for (auto& stmt : stmts) {
      if (auto* res = std::get_if<Resource>(&stmt.node)) {
        res->type = db->type(tech, res->type);
        for (auto& attr : res->attributes) {
          attr.name = db->attribute(tech, res->type, attr.name);
          Expr& v = attr.value;
          if (v.kind == ExprKind::String || v.kind == ExprKind::Bool || v.kind == ExprKind::Int) {
            std::string rendered = literal_rendering(v);
            std::string canonical = db->value(tech, res->type, attr.name, rendered);
            if (canonical != rendered) {
              v.kind = ExprKind::String;
              v.text = canonical;
            }
          }
        }
      } else if (auto* cond = std::get_if<Conditional>(&stmt.node)) {
        walk(cond->then_branch);
        walk(cond->else_branch);
      }
    }
  };
  walk(out.statements);
  out.db = std::move(db);
  out.normalized = true;
  return out;
}

std::filesystem::path default_db_path() {
  if (const char* env = std::getenv("INFRAFIX_NORMALIZATION_DB"); env && *env) return env;
  return std::filesystem::path(INFRAFIX_DATA_DIR) / "normalization.db";
}

std::shared_ptr<const NormalizationDb> load_default_db() {
  return std::make_shared<const NormalizationDb>(NormalizationDb::load_file(default_db_path()));
}

}  // namespace infrafix
