#include "fastre/model_io.hpp"

#include <algorithm>

#include <json.hpp>

#include "fastre/checkpoint.hpp"
#include "fastre/errors.hpp"
#include "fastre/io.hpp"

FASTRE_BEGIN_NAMESPACE

using nlohmann::json;

namespace {

constexpr const char* kMetaRecord = "meta.config";

json meta_json(const Model& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["model"] = json::parse(to_json(model.config));
  j["type_map"] = json::parse(model.type_map.to_json());
  j["vocab"] = json::parse(model.vocab.to_json());
  return j;
}

}  // namespace

std::string encode_model(const Model& model) {
  std::vector<NamedRecord> records;
  records.push_back(text_record(kMetaRecord, meta_json(model).dump()));
  for (const auto& p : model.params.params()) {
    NamedRecord r;
    r.name = p.name;
    for (auto d : p.tensor.shape()) r.dims.push_back(static_cast<std::uint32_t>(d));
    const auto values = p.tensor.data();
    r.values.assign(values.begin(), values.end());
    records.push_back(std::move(r));
  }
  return encode_checkpoint(records);
}

Model decode_model(std::string_view bytes) {
  const auto records = decode_checkpoint(bytes);
  if (records.empty() || records.front().name != kMetaRecord) {
    throw FormatError("checkpoint has no leading \"meta.config\" record");
  }
  json meta;
  try {
    meta = json::parse(record_text(records.front()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("meta.config is not valid JSON: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("format_version") ||
      !meta.at("format_version").is_number_integer()) {
    throw FormatError("meta.config lacks an integer format_version");
  }
  const auto version = meta.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format_version " + std::to_string(version));
  }
  for (const char* key : {"model", "type_map", "vocab"}) {
    if (!meta.contains(key)) throw FormatError(std::string("meta.config lacks \"") + key + "\"");
  }

  ModelConfig config;
  TypeRelationMap map;
  Vocabulary vocab;
  try {
    config = model_config_from_json(meta.at("model").dump());
    map = TypeRelationMap::from_json(meta.at("type_map").dump());
    vocab = Vocabulary::from_json(meta.at("vocab").dump());
  } catch (const FormatError&) {
    throw;
  } catch (const ValidationError& e) {
    throw FormatError(std::string("meta.config: ") + e.what());
  }

  const Tensor placeholder = Tensor::zeros({vocab.size(), config.encoder.glove_dim});
  Model model = create_model(config, map, vocab, placeholder, 0);
  auto params = model.params.params();
  if (records.size() != params.size() + 1) {
    throw FormatError("checkpoint holds " + std::to_string(records.size() - 1) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& r = records[i + 1];
    auto& p = params[i];
    if (r.name != p.name) {
      throw FormatError("tensor " + std::to_string(i) + " is \"" + r.name + "\", expected \"" +
                        p.name + "\"");
    }
    const auto& shape = p.tensor.shape();
    if (!std::equal(shape.begin(), shape.end(), r.dims.begin(), r.dims.end())) {
      throw FormatError("tensor \"" + r.name + "\" has the wrong shape for " +
                        shape_string(shape));
    }
    auto dst = p.tensor.mutable_data();
    std::copy(r.values.begin(), r.values.end(), dst.begin());
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  atomic_write(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

FASTRE_END_NAMESPACE
