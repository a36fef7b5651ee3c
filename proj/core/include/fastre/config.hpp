#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

struct EncoderConfig {
  std::size_t hidden = 128;  // d
  std::size_t kernel_size = 3;
  std::size_t layers = 6;
  std::vector<std::size_t> dilation_rates{1, 2, 4, 1, 1, 1};
  double dropout_rate = 0.1;
  std::size_t max_len = 100;
  std::size_t glove_dim = 300;
};

// Each flag removes one component of the architecture.
struct Ablations {
  bool no_dilation = false;       // every block uses dilation 1
  bool no_gate = false;           // Y = conv_a(X) + X, conv_b not allocated
  bool no_residual = false;       // Y = conv_a(X) * sigmoid(conv_b(X))
  bool no_mapping = false;        // every head type scores all relations
  bool global_threshold = false;  // sigmoid + fixed threshold, BCE loss

  bool operator==(const Ablations&) const = default;
};

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t attention_heads = 1;
  std::size_t type_dim = 64;      // d_t
  double global_threshold = 0.5;  // tau, used only with Ablations::global_threshold
  Ablations ablations;

  // Dilation schedule after applying no_dilation.
  std::vector<std::size_t> effective_dilations() const;

  // Throws ValidationError when an invariant fails.
  void validate() const;
};

std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

// Parses "name" from {no_dilation, no_gate, no_residual, no_mapping,
// global_threshold} and sets it.
void enable_ablation(Ablations& ablations, const std::string& name);

FASTRE_END_NAMESPACE
