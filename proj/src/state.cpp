#include "infrafix/state.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "infrafix/error.hpp"

namespace infrafix {

const ResourceState* SystemState::find(std::string_view id) const {
  for (const auto& r : resources) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

ResourceState* SystemState::find(std::string_view id) {
  for (auto& r : resources) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

bool valid_resource_id(std::string_view id) {
  auto colon = id.find(':');
  return colon != std::string_view::npos && colon > 0 && colon + 1 < id.size();
}

SystemState state_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("state must be a JSON array");
  SystemState state;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const std::string where = "state entry " + std::to_string(i);
    if (!item.is_object()) throw FormatError(where + ": expected an object");
    auto id = item.find("id");
    if (id == item.end() || !id->is_string()) throw FormatError(where + ": missing string \"id\"");
    ResourceState r;
    r.id = id->get<std::string>();
    if (!valid_resource_id(r.id)) throw FormatError(where + ": malformed id '" + r.id + "'");
    if (!seen.insert(r.id).second) throw FormatError(where + ": duplicate id '" + r.id + "'");
    auto attrs = item.find("attributes");
    if (attrs == item.end() || !attrs->is_object()) {
      throw FormatError(where + ": missing \"attributes\" object");
    }
    for (const auto& [k, v] : attrs->items()) {
      if (!v.is_string()) throw FormatError(where + ": attribute '" + k + "' is not a string");
      r.attributes.emplace(k, v.get<std::string>());
    }
    if (r.attributes.empty()) throw FormatError(where + ": empty attribute map");
    for (const auto& [k, v] : item.items()) {
      if (k != "id" && k != "attributes") throw FormatError(where + ": unexpected key '" + k + "'");
    }
    state.resources.push_back(std::move(r));
  }
  return state;
}

SystemState parse_state(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("state is not valid JSON: ") + e.what());
  }
  return state_from_json(j);
}

nlohmann::json state_to_json(const SystemState& state) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : state.resources) {
    nlohmann::json attrs = nlohmann::json::object();
    for (const auto& [k, v] : r.attributes) attrs[k] = v;
    out.push_back({{"id", r.id}, {"attributes", std::move(attrs)}});
  }
  return out;
}

std::string serialize_state(const SystemState& state) {
  // ordered_json keeps "id" ahead of "attributes" for readability.
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : state.resources) {
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.attributes) attrs[k] = v;
    out.push_back({{"id", r.id}, {"attributes", std::move(attrs)}});
  }
  return out.dump(2) + "\n";
}

bool satisfies(const SystemState& actual, const SystemState& desired) {
  for (const auto& want : desired.resources) {
    const ResourceState* have = actual.find(want.id);
    if (!have) return false;
    for (const auto& [k, v] : want.attributes) {
      auto it = have->attributes.find(k);
      if (it == have->attributes.end() || it->second != v) return false;
    }
  }
  return true;
}

std::vector<StateDiff> diff(const SystemState& actual, const SystemState& desired) {
  std::vector<StateDiff> out;
  for (const auto& want : desired.resources) {
    const ResourceState* have = actual.find(want.id);
    if (!have) {
      out.push_back({want.id, "", "", "missing-resource", DiffKind::MissingResource});
      continue;
    }
    for (const auto& [k, v] : want.attributes) {
      auto it = have->attributes.find(k);
      if (it == have->attributes.end()) {
        out.push_back({want.id, k, v, "missing-attribute", DiffKind::MissingAttribute});
      } else if (it->second != v) {
        out.push_back({want.id, k, v, it->second, DiffKind::WrongValue});
      }
    }
  }
  return out;
}

}  // namespace infrafix
