#include "fastre/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "fastre/errors.hpp"
#include "fastre/io.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

constexpr std::string_view kMagic = "FRE1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what +
                        " at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

NamedRecord text_record(std::string name, const std::string& text) {
  NamedRecord r;
  r.name = std::move(name);
  r.dims = {static_cast<std::uint32_t>(text.size())};
  r.values.reserve(text.size());
  for (unsigned char c : text) r.values.push_back(static_cast<float>(c));
  return r;
}

std::string record_text(const NamedRecord& record) {
  std::string out;
  out.reserve(record.values.size());
  for (float v : record.values) {
    if (!(v >= 0.0f && v <= 255.0f) || v != static_cast<float>(static_cast<int>(v))) {
      throw FormatError("record '" + record.name + "' is not a text record");
    }
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

std::string encode_checkpoint(std::span<const NamedRecord> records) {
  std::string out(kMagic);
  for (const auto& r : records) {
    std::size_t count = 1;
    for (auto d : r.dims) count *= d;
    if (count != r.values.size()) {
      throw ShapeError("checkpoint record '" + r.name + "' has " +
                       std::to_string(r.values.size()) + " values for its dims");
    }
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    put_u32(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) put_u32(out, d);
    for (float v : r.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<NamedRecord> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, 3) != kMagic.substr(0, 3)) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  if (bytes.substr(0, 4) != kMagic) {
    throw FormatError("unsupported checkpoint version '" +
                      std::string(bytes.substr(0, 4)) + "', expected FRE1");
  }
  Reader in(bytes.substr(kMagic.size()));
  std::vector<NamedRecord> records;
  while (!in.done()) {
    NamedRecord r;
    const auto name_len = in.u32("name length");
    r.name = std::string(in.take(name_len, "name"));
    const auto rank = in.u32("rank");
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      r.dims.push_back(in.u32("dims"));
      count *= r.dims.back();
    }
    if (count > bytes.size()) {
      throw FormatError("checkpoint truncated in payload of '" + r.name + "'");
    }
    r.values.resize(count);
    for (auto& v : r.values) v = std::bit_cast<float>(in.u32("payload"));
    records.push_back(std::move(r));
  }
  return records;
}

void write_checkpoint_file(const std::filesystem::path& path,
                           std::span<const NamedRecord> records) {
  atomic_write(path, encode_checkpoint(records));
}

std::vector<NamedRecord> read_checkpoint_file(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw RuntimeFailure("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FASTRE_END_NAMESPACE
