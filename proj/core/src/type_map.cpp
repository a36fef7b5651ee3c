#include "fastre/type_map.hpp"

#include <json.hpp>

#include "fastre/errors.hpp"
#include "fastre/io.hpp"

FASTRE_BEGIN_NAMESPACE

using nlohmann::json;

std::optional<std::size_t> entity_type_id(std::string_view name) {
  for (std::size_t i = 0; i < kEntityTypes.size(); ++i)
    if (kEntityTypes[i] == name) return i;
  return std::nullopt;
}

TypeRelationMap TypeRelationMap::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("type-relation map: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("type-relation map must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!entity_type_id(key)) throw ValidationError("type-relation map: unknown type '" + key + "'");
    if (!value.is_array()) {
      throw ValidationError("type-relation map: entry for " + key + " must be an array");
    }
  }
  TypeRelationMap map;
  for (std::size_t t = 0; t < kEntityTypeCount; ++t) {
    const std::string key(kEntityTypes[t]);
    if (!j.contains(key)) continue;
    for (const auto& rel : j.at(key)) {
      if (!rel.is_string()) {
        throw ValidationError("type-relation map: relation names must be strings");
      }
      const auto name = rel.get<std::string>();
      if (map.relation_id(name)) {
        throw ValidationError("type-relation map: relation '" + name +
                              "' is listed under more than one type (or twice); "
                              "each relation needs a unique head type");
      }
      map.forward_[t].push_back(map.relations_.size());
      map.inverse_.push_back(t);
      map.relations_.push_back(name);
    }
  }
  return map;
}

TypeRelationMap TypeRelationMap::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

std::string TypeRelationMap::to_json() const {
  json j = json::object();
  for (std::size_t t = 0; t < kEntityTypeCount; ++t) {
    json list = json::array();
    for (auto r : forward_[t]) list.push_back(relations_[r]);
    j[std::string(kEntityTypes[t])] = std::move(list);
  }
  return j.dump();
}

const std::string& TypeRelationMap::relation_name(std::size_t id) const {
  if (id >= relations_.size()) throw ValidationError("unknown relation id " + std::to_string(id));
  return relations_[id];
}

std::optional<std::size_t> TypeRelationMap::relation_id(std::string_view name) const {
  for (std::size_t i = 0; i < relations_.size(); ++i)
    if (relations_[i] == name) return i;
  return std::nullopt;
}

std::span<const std::size_t> TypeRelationMap::relations_for(std::size_t type_id) const {
  if (type_id >= kEntityTypeCount) {
    throw ValidationError("unknown entity type id " + std::to_string(type_id));
  }
  return forward_[type_id];
}

std::size_t TypeRelationMap::head_type(std::size_t relation_id) const {
  if (relation_id >= inverse_.size()) {
    throw ValidationError("unknown relation id " + std::to_string(relation_id));
  }
  return inverse_[relation_id];
}

std::vector<std::size_t> potential_relations(std::size_t type_id, const TypeRelationMap& map,
                                             bool mapping_enabled) {
  const auto mapped = map.relations_for(type_id);
  if (mapping_enabled) return {mapped.begin(), mapped.end()};
  std::vector<std::size_t> all(map.relation_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

FASTRE_END_NAMESPACE
