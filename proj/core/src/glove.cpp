#include "fastre/glove.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fastre/errors.hpp"

FASTRE_BEGIN_NAMESPACE

std::optional<std::size_t> GloveTable::find(const std::string& word) const {
  const auto it = index.find(word);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::vector<Real> GloveTable::mean_row() const {
  std::vector<double> acc(dim, 0.0);
  for (std::size_t r = 0; r < words.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) acc[c] += values[r * dim + c];
  std::vector<Real> out(dim, Real{0});
  if (words.empty()) return out;
  for (std::size_t c = 0; c < dim; ++c)
    out[c] = static_cast<Real>(acc[c] / static_cast<double>(words.size()));
  return out;
}

GloveTable parse_glove(std::istream& in, std::size_t dim) {
  if (dim == 0) throw ValidationError("GloVe dimension must be positive");
  GloveTable table;
  table.dim = dim;
  std::string line;
  std::vector<Real> row(dim);
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;  // blank line
    std::size_t count = 0;
    bool ok = true;
    std::string tok;
    while (fields >> tok) {
      if (count >= dim) {
        ok = false;
        break;
      }
      double v = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        ok = false;
        break;
      }
      row[count++] = static_cast<Real>(v);
    }
    if (!ok || count != dim) {
      ++table.malformed_lines;
      continue;
    }
    if (table.index.contains(word)) continue;
    table.index.emplace(word, table.words.size());
    table.words.push_back(word);
    table.values.insert(table.values.end(), row.begin(), row.end());
  }
  return table;
}

GloveTable load_glove(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open GloVe file: " + path.string());
  return parse_glove(in, dim);
}

FASTRE_END_NAMESPACE
