#include "fastre/config.hpp"

#include <json.hpp>

#include "fastre/errors.hpp"

FASTRE_BEGIN_NAMESPACE

using nlohmann::json;

std::vector<std::size_t> ModelConfig::effective_dilations() const {
  if (ablations.no_dilation) return std::vector<std::size_t>(encoder.layers, 1);
  return encoder.dilation_rates;
}

void ModelConfig::validate() const {
  const auto& e = encoder;
  if (e.hidden == 0) throw ValidationError("hidden dimension must be positive");
  if (e.kernel_size % 2 == 0) {
    throw ValidationError("kernel_size must be odd, got " + std::to_string(e.kernel_size));
  }
  if (e.dilation_rates.size() != e.layers) {
    throw ValidationError("dilation_rates has " + std::to_string(e.dilation_rates.size()) +
                          " entries for " + std::to_string(e.layers) + " layers");
  }
  for (auto r : e.dilation_rates)
    if (r < 1) throw ValidationError("dilation rates must be >= 1");
  if (!(e.dropout_rate >= 0.0 && e.dropout_rate < 1.0))
    throw ValidationError("dropout_rate must be in [0, 1)");
  if (e.max_len == 0 || e.glove_dim == 0)
    throw ValidationError("max_len and glove_dim must be positive");
  if (attention_heads == 0 || e.hidden % attention_heads != 0)
    throw ValidationError("attention_heads must divide the hidden dimension");
  if (type_dim == 0) throw ValidationError("type_dim must be positive");
  if (!(global_threshold > 0.0 && global_threshold < 1.0))
    throw ValidationError("global_threshold must be in (0, 1)");
}

std::string to_json(const ModelConfig& c) {
  json j;
  j["hidden"] = c.encoder.hidden;
  j["kernel_size"] = c.encoder.kernel_size;
  j["layers"] = c.encoder.layers;
  j["dilation_rates"] = c.encoder.dilation_rates;
  j["dropout_rate"] = c.encoder.dropout_rate;
  j["max_len"] = c.encoder.max_len;
  j["glove_dim"] = c.encoder.glove_dim;
  j["attention_heads"] = c.attention_heads;
  j["type_dim"] = c.type_dim;
  j["global_threshold"] = c.global_threshold;
  j["ablations"] = {{"no_dilation", c.ablations.no_dilation},
                    {"no_gate", c.ablations.no_gate},
                    {"no_residual", c.ablations.no_residual},
                    {"no_mapping", c.ablations.no_mapping},
                    {"global_threshold", c.ablations.global_threshold}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.encoder.hidden = j.value("hidden", c.encoder.hidden);
    c.encoder.kernel_size = j.value("kernel_size", c.encoder.kernel_size);
    c.encoder.layers = j.value("layers", c.encoder.layers);
    c.encoder.dilation_rates = j.value("dilation_rates", c.encoder.dilation_rates);
    c.encoder.dropout_rate = j.value("dropout_rate", c.encoder.dropout_rate);
    c.encoder.max_len = j.value("max_len", c.encoder.max_len);
    c.encoder.glove_dim = j.value("glove_dim", c.encoder.glove_dim);
    c.attention_heads = j.value("attention_heads", c.attention_heads);
    c.type_dim = j.value("type_dim", c.type_dim);
    c.global_threshold = j.value("global_threshold", c.global_threshold);
    if (j.contains("ablations")) {
      const auto& a = j.at("ablations");
      c.ablations.no_dilation = a.value("no_dilation", false);
      c.ablations.no_gate = a.value("no_gate", false);
      c.ablations.no_residual = a.value("no_residual", false);
      c.ablations.no_mapping = a.value("no_mapping", false);
      c.ablations.global_threshold = a.value("global_threshold", false);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid model config: ") + e.what());
  }
  return c;
}

void enable_ablation(Ablations& a, const std::string& name) {
  if (name == "no_dilation") {
    a.no_dilation = true;
  } else if (name == "no_gate") {
    a.no_gate = true;
  } else if (name == "no_residual") {
    a.no_residual = true;
  } else if (name == "no_mapping") {
    a.no_mapping = true;
  } else if (name == "global_threshold") {
    a.global_threshold = true;
  } else {
    throw ValidationError("unknown ablation: " + name);
  }
}

FASTRE_END_NAMESPACE
