#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

/// Word vectors read from "token v1 ... vD" text lines.
struct GloveTable {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::vector<Real> values;  // words.size() x dim, row-major
  std::size_t malformed_lines = 0;

  std::optional<std::size_t> find(const std::string& word) const;
  std::span<const Real> row(std::size_t index) const {
    return {values.data() + index * dim, dim};
  }
  // Column-wise mean of all rows (zeros for an empty table).
  std::vector<Real> mean_row() const;

  std::unordered_map<std::string, std::size_t> index;
};

/// Lines whose field count differs from dim + 1, or with unparsable numbers,
/// are skipped and counted in malformed_lines. Repeated words keep the first
/// occurrence.
GloveTable parse_glove(std::istream& in, std::size_t dim);
GloveTable load_glove(const std::filesystem::path& path, std::size_t dim);

FASTRE_END_NAMESPACE
