#pragma once

// Named-tensor checkpoint container ("FRE1").
//
//   magic    "FRE1"
//   records  repeated until end of file:
//              name_len : u32 LE
//              name     : name_len bytes, UTF-8
//              rank     : u32 LE
//              dims     : rank x u32 LE
//              payload  : product(dims) x f32 LE, row-major
//
// Text records (JSON metadata) are stored as rank-1 tensors holding one byte
// value per element.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

struct NamedRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  bool operator==(const NamedRecord&) const = default;
};

NamedRecord text_record(std::string name, const std::string& text);
std::string record_text(const NamedRecord& record);

std::string encode_checkpoint(std::span<const NamedRecord> records);
// Throws FormatError on bad magic, unsupported version or truncation.
std::vector<NamedRecord> decode_checkpoint(std::string_view bytes);

void write_checkpoint_file(const std::filesystem::path& path,
                           std::span<const NamedRecord> records);
std::vector<NamedRecord> read_checkpoint_file(const std::filesystem::path& path);

FASTRE_END_NAMESPACE
