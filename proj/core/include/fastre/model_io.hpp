#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fastre/model.hpp"

FASTRE_BEGIN_NAMESPACE

inline constexpr int kModelFormatVersion = 1;

/// FRE1 container whose first record, "meta.config", is a JSON object
///   {"format_version", "model", "type_map", "vocab"}
/// followed by every tensor of model.params in registration order.
/// Optimizer state is not stored.
std::string encode_model(const Model& model);

/// Rebuilds the model described by "meta.config" and fills in the tensors.
/// Throws FormatError on a missing or extra tensor, a shape mismatch or an
/// unknown format_version.
Model decode_model(std::string_view bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

FASTRE_END_NAMESPACE
