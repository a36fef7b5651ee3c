#include "fastre/data.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include <json.hpp>

#include "fastre/errors.hpp"
#include "fastre/io.hpp"

FASTRE_BEGIN_NAMESPACE

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

Span parse_span(const json& j, const char* field, std::size_t n_tokens) {
  if (!j.contains(field)) throw ValidationError(std::string("missing \"") + field + "\"");
  const auto& v = j.at(field);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer()) {
    throw ValidationError(std::string("\"") + field + "\" must be [start, end]");
  }
  const auto s = v[0].get<std::int64_t>();
  const auto e = v[1].get<std::int64_t>();
  if (s < 0 || e < s || static_cast<std::size_t>(e) >= n_tokens) {
    throw ValidationError(std::string("\"") + field + "\" span [" + std::to_string(s) + ", " +
                          std::to_string(e) + "] out of range for " +
                          std::to_string(n_tokens) + " tokens");
  }
  return {static_cast<std::size_t>(s), static_cast<std::size_t>(e)};
}

Example parse_line(const std::string& line, const CorpusOptions& options,
                   std::size_t& dropped) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
    throw ValidationError("expected an object with a string \"text\"");
  }
  Example ex;
  ex.tokens = tokenize(j.at("text").get<std::string>());
  if (ex.tokens.empty()) throw ValidationError("empty text");
  const std::size_t full_length = ex.tokens.size();
  if (ex.tokens.size() > options.max_len) ex.tokens.resize(options.max_len);

  if (j.contains("triples")) {
    const auto& list = j.at("triples");
    if (!list.is_array()) throw ValidationError("\"triples\" must be an array");
    for (const auto& t : list) {
      if (!t.is_object()) throw ValidationError("triple must be an object");
      GoldTriple g;
      g.head = parse_span(t, "head", full_length);
      g.tail = parse_span(t, "tail", full_length);
      if (!t.contains("head_type") || !t.at("head_type").is_string()) {
        throw ValidationError("missing string \"head_type\"");
      }
      const auto type_name = t.at("head_type").get<std::string>();
      const auto type = entity_type_id(type_name);
      if (!type) throw ValidationError("unknown head_type '" + type_name + "'");
      g.head_type = *type;
      if (!t.contains("relation") || !t.at("relation").is_string()) {
        throw ValidationError("missing string \"relation\"");
      }
      g.relation = t.at("relation").get<std::string>();
      if (g.head.end >= ex.tokens.size() || g.tail.end >= ex.tokens.size()) {
        ++dropped;
        continue;
      }
      if (std::find(ex.triples.begin(), ex.triples.end(), g) == ex.triples.end()) {
        ex.triples.push_back(std::move(g));
      }
    }
  }
  return ex;
}

}  // namespace

std::vector<Example> parse_corpus(std::string_view text, const CorpusOptions& options,
                                  CorpusReport* report) {
  CorpusReport local;
  CorpusReport& rep = report ? *report : local;
  std::vector<Example> corpus;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto next = text.find('\n', pos);
    if (next == std::string_view::npos) next = text.size();
    std::string line(text.substr(pos, next - pos));
    pos = next + 1;
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    ++rep.lines;
    try {
      corpus.push_back(parse_line(line, options, rep.dropped_triples));
    } catch (const ValidationError& e) {
      const std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
      if (!options.skip_invalid) throw ValidationError(msg);
      rep.errors.push_back(msg);
    }
  }
  return corpus;
}

std::vector<Example> load_corpus(const std::filesystem::path& path,
                                 const CorpusOptions& options, CorpusReport* report) {
  return parse_corpus(read_file(path), options, report);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  std::erase(tokens, std::string(kUnkToken));
  words_ = std::move(tokens);
  for (std::size_t i = 0; i < words_.size(); ++i)
    index_.emplace(words_[i], static_cast<std::int64_t>(i + 1));
}

std::int64_t Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int64_t> Vocabulary::ids(std::span<const std::string> tokens) const {
  std::vector<std::int64_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::string Vocabulary::to_json() const { return json(words_).dump(); }

Vocabulary Vocabulary::from_json(std::string_view text) {
  try {
    return Vocabulary(json::parse(text).get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid vocabulary record: ") + e.what());
  }
}

Example truncate_example(const Example& example, std::size_t max_len) {
  Example ex = example;
  if (ex.tokens.size() <= max_len) return ex;
  ex.tokens.resize(max_len);
  std::erase_if(ex.triples, [&](const GoldTriple& t) {
    return t.head.end >= max_len || t.tail.end >= max_len;
  });
  return ex;
}

Vocabulary build_vocab(std::span<const Example> corpus, const GloveTable& glove) {
  std::vector<std::string> tokens;
  for (const auto& ex : corpus)
    for (const auto& t : ex.tokens)
      if (glove.find(t)) tokens.push_back(t);
  return Vocabulary(std::move(tokens));
}

Tensor build_embedding_table(const Vocabulary& vocab, const GloveTable& glove) {
  const std::size_t dim = glove.dim;
  std::vector<Real> data;
  data.reserve(vocab.size() * dim);
  const auto mean = glove.mean_row();
  data.insert(data.end(), mean.begin(), mean.end());
  for (const auto& w : vocab.words()) {
    const auto idx = glove.find(w);
    if (!idx) throw ValidationError("vocabulary token '" + w + "' has no GloVe vector");
    const auto row = glove.row(*idx);
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor::from_data({vocab.size(), dim}, std::move(data));
}

LabelTensors build_labels(const Example& example, const TypeRelationMap& map,
                          bool mapping_enabled) {
  const std::size_t n = example.tokens.size();
  const std::size_t relations = map.relation_count();
  LabelTensors out{PositionLabels(n, kEntityTypeCount), PositionLabels(n, kEntityTypeCount), {}};
  for (const auto& t : example.triples) {
    const auto rel = map.relation_id(t.relation);
    if (!rel) throw ValidationError("relation '" + t.relation + "' is not in the type-relation map");
    if (mapping_enabled && map.head_type(*rel) != t.head_type) {
      throw ValidationError("relation '" + t.relation + "' is not permitted for head type " +
                            std::string(kEntityTypes[t.head_type]));
    }
    out.head_start.set(t.head.start, t.head_type);
    out.head_end.set(t.head.end, t.head_type);
    auto it = std::find_if(out.tails.begin(), out.tails.end(), [&](const TailLabels& tl) {
      return tl.head.start == t.head.start && tl.head.end == t.head.end &&
             tl.head.type == t.head_type;
    });
    if (it == out.tails.end()) {
      out.tails.push_back({TypedSpan{t.head.start, t.head.end, t.head_type, 0},
                           PositionLabels(n, relations), PositionLabels(n, relations)});
      it = std::prev(out.tails.end());
    }
    it->start.set(t.tail.start, *rel);
    it->end.set(t.tail.end, *rel);
  }
  return out;
}

std::vector<Triple> gold_triples(const Example& example, const TypeRelationMap& map) {
  std::vector<Triple> out;
  for (const auto& t : example.triples) {
    const auto rel = map.relation_id(t.relation);
    if (!rel) throw ValidationError("relation '" + t.relation + "' is not in the type-relation map");
    Triple tr{TypedSpan{t.head.start, t.head.end, t.head_type, 0}, *rel, t.tail, 0};
    if (std::find(out.begin(), out.end(), tr) == out.end()) out.push_back(tr);
  }
  return out;
}

FASTRE_END_NAMESPACE
