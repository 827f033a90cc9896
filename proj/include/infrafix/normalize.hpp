#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "infrafix/ir.hpp"

namespace infrafix {

struct CanonicalAttribute {
  std::string name;
  std::vector<std::string> closed_values;  // empty = open-valued
};

struct CanonicalType {
  std::string name;
  std::string identifying_attr;
  std::vector<CanonicalAttribute> attributes;  // includes the identifying attribute
};

// The canonical resource vocabulary shared by every technology: which types
// the repair engine supports, their attributes, and closed value sets.
class CanonicalModel {
 public:
  static const CanonicalModel& builtin();

  const CanonicalType* find(std::string_view type) const;
  bool supported(std::string_view type) const { return find(type) != nullptr; }
  const CanonicalAttribute* attribute(std::string_view type, std::string_view attr) const;
  // nullptr when the attribute is open-valued or undeclared.
  const std::vector<std::string>* closed_values(std::string_view type, std::string_view attr) const;
  // Identifying attribute of a supported type, empty otherwise.
  std::string identifying_attr(std::string_view type) const;

  const std::vector<CanonicalType>& types() const { return types_; }

 private:
  std::vector<CanonicalType> types_;
};

enum class RuleKind { Type, Attr, Value };

struct NormalizationRule {
  Tech tech;
  std::string type;       // canonical type
  RuleKind kind;
  std::string attribute;  // canonical attribute, Value rules only
  std::string raw;
  std::string canonical;
  int line = 0;
};

struct NormalizationScope {
  Tech tech;
  std::string type;
  std::optional<std::string> attribute;
};

// Data-driven mapping between technology-specific names/values and the
// canonical vocabulary. Immutable after load; every rule is invertible within
// its (tech, kind, type, attribute) scope.
class NormalizationDb {
 public:
  // One rule per line: `tech|canonical_type|kind|raw|canonical` with kind in
  // {type, attr, value:<canonical_attr>}; `#` starts a comment. Throws LoadError.
  static NormalizationDb load(std::string_view text);
  static NormalizationDb load_file(const std::filesystem::path& path);

  std::string type(Tech tech, std::string_view raw) const;
  std::string attribute(Tech tech, std::string_view type, std::string_view raw) const;
  std::string value(Tech tech, std::string_view type, std::string_view attr, std::string_view raw) const;

  // Inverse lookups; canonical strings without a rule come back unchanged.
  std::string denormalize(std::string_view canonical, const NormalizationScope& scope) const;
  std::string denormalize_type(Tech tech, std::string_view canonical_type) const;

  std::string identifying_attr(std::string_view type) const;

  const std::vector<NormalizationRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  using Key = std::tuple<Tech, RuleKind, std::string, std::string>;  // tech, kind, type, attr
  std::vector<NormalizationRule> rules_;
  std::map<Key, std::map<std::string, std::string, std::less<>>> forward_;
  std::map<Key, std::map<std::string, std::string, std::less<>>> inverse_;
};

// Rewrites resource types, attribute names and literal reserved values to
// canonical forms. Spans keep pointing at the raw text. The returned script
// carries `db` so that evaluation can normalize values reached via variables.
IRScript normalize_script(const IRScript& script, std::shared_ptr<const NormalizationDb> db);

// Path of the normalization database shipped with the project, honouring the
// INFRAFIX_NORMALIZATION_DB environment override.
std::filesystem::path default_db_path();
std::shared_ptr<const NormalizationDb> load_default_db();

}  // namespace infrafix
