#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

// Head-entity types, in id order.
inline constexpr std::array<std::string_view, 4> kEntityTypes{"PER", "LOC", "ORG", "OTH"};
inline constexpr std::size_t kEntityTypeCount = kEntityTypes.size();

std::optional<std::size_t> entity_type_id(std::string_view name);

/// Entity type -> permitted relations, and relation -> its unique head type.
///
/// Relation ids are assigned by walking the types in id order (PER, LOC, ORG,
/// OTH) and each type's list in file order.
class TypeRelationMap {
 public:
  TypeRelationMap() : forward_(kEntityTypeCount) {}

  /// Parses {"PER": [...], "LOC": [...], "ORG": [...], "OTH": [...]}.
  /// Missing types are treated as empty. Throws ValidationError on unknown
  /// type keys, non-string entries, or a relation listed more than once.
  static TypeRelationMap from_json(std::string_view text);
  static TypeRelationMap load(const std::filesystem::path& path);
  std::string to_json() const;

  std::size_t relation_count() const { return relations_.size(); }
  std::size_t type_count() const { return kEntityTypeCount; }
  const std::vector<std::string>& relation_names() const { return relations_; }
  const std::string& relation_name(std::size_t id) const;
  std::optional<std::size_t> relation_id(std::string_view name) const;

  std::span<const std::size_t> relations_for(std::size_t type_id) const;
  std::size_t head_type(std::size_t relation_id) const;

  bool operator==(const TypeRelationMap&) const = default;

 private:
  std::vector<std::string> relations_;
  std::vector<std::vector<std::size_t>> forward_;
  std::vector<std::size_t> inverse_;
};

/// R' for a head of the given type: the mapped set when enabled, every
/// relation otherwise. Throws ValidationError for an unknown type id.
std::vector<std::size_t> potential_relations(std::size_t type_id,
                                             const TypeRelationMap& map,
                                             bool mapping_enabled);

FASTRE_END_NAMESPACE
