#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace infrafix {

// Value recorded for attributes whose expression cannot be evaluated.
inline constexpr std::string_view kUnknownValue = "⟂unknown⟂";

struct ResourceState {
  std::string id;  // <canonical_type>:<identifier>
  std::map<std::string, std::string> attributes;

  std::string type() const { return id.substr(0, id.find(':')); }
  std::string identifier() const { return id.substr(id.find(':') + 1); }
  bool operator==(const ResourceState&) const = default;
};

struct SystemState {
  std::vector<ResourceState> resources;

  const ResourceState* find(std::string_view id) const;
  ResourceState* find(std::string_view id);
  bool operator==(const SystemState&) const = default;
};

// Non-empty type, a colon, non-empty identifier.
bool valid_resource_id(std::string_view id);

// State file: a JSON array of {"id": string, "attributes": {string: string}}.
// Throws FormatError on malformed ids, duplicates, empty attribute maps and
// non-string values.
SystemState parse_state(std::string_view text);
SystemState state_from_json(const nlohmann::json& j);
nlohmann::json state_to_json(const SystemState& state);
std::string serialize_state(const SystemState& state);

// Subset semantics: every desired resource exists in `actual` and agrees on
// every attribute the desired resource lists.
bool satisfies(const SystemState& actual, const SystemState& desired);

enum class DiffKind { WrongValue, MissingAttribute, MissingResource };

struct StateDiff {
  std::string id;
  std::string attribute;  // empty for MissingResource
  std::string expected;   // empty for MissingResource
  std::string found;      // actual value, or "missing-attribute" / "missing-resource"
  DiffKind kind = DiffKind::WrongValue;
};

// Differences in desired order; empty iff satisfies(actual, desired).
std::vector<StateDiff> diff(const SystemState& actual, const SystemState& desired);

}  // namespace infrafix
