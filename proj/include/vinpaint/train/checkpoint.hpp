#pragma once

// Checkpoint file layout (all integers little-endian):
//   "VINPCKPT"                      8 bytes magic
//   u32 format version              (kCheckpointVersion)
//   u32 variant tag                 0 base, 1 v1, 2 v2
//   u32 n, n bytes                  config JSON
//   u64 iteration
//   u32 phase                       0 pretrain, 1 joint
//   u32 tensor count, then per tensor:
//     u32 n, n bytes name | u8 dtype (1 = f32) | u32 rank | rank x i64 dims | f32 data
//   u32 CRC-32 of every preceding byte

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "vinpaint/train/config.hpp"

namespace vinpaint::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'V', 'I', 'N', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Phase { Pretrain, Joint };

struct Checkpoint {
  TrainConfig config;
  std::uint64_t iter = 0;
  Phase phase = Phase::Pretrain;
  nn::ParameterSet<float> tensors;  // model parameters plus optional "adam/..." state
};

namespace detail {

class ByteWriter {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<char>& bytes() { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}
  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return v;
  }
  const char* take(std::size_t n) {
    if (n > size_ - pos_) throw ChecksumError("checkpoint truncated");
    const char* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const char* p = take(n);
    return std::string(p, n);
  }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

inline std::uint32_t variant_code(models::VariantTag t) { return static_cast<std::uint32_t>(t); }

}  // namespace detail

inline std::vector<char> encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.put_bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put(kCheckpointVersion);
  w.put(detail::variant_code(ck.config.variant.tag));
  w.put_string(nlohmann::json(ck.config).dump());
  w.put(ck.iter);
  w.put(static_cast<std::uint32_t>(ck.phase));
  w.put(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    w.put_string(name);
    w.put(std::uint8_t{1});
    w.put(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) w.put(static_cast<std::int64_t>(d));
    w.put_bytes(t.data(), t.size() * sizeof(float));
  }
  const auto crc = detail::crc32_of(w.bytes().data(), w.bytes().size());
  w.put(crc);
  return std::move(w.bytes());
}

// Throws ChecksumError on corruption or truncation and VersionError on a format
// version or (when `expected` is given) variant mismatch.
inline Checkpoint decode_checkpoint(const std::vector<char>& bytes,
                                    std::optional<models::VariantTag> expected = std::nullopt) {
  if (bytes.size() < sizeof kCheckpointMagic + 4) throw ChecksumError("checkpoint too short");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (detail::crc32_of(bytes.data(), bytes.size() - 4) != stored) throw ChecksumError("CRC mismatch");
  detail::ByteReader r(bytes.data(), bytes.size() - 4);
  if (std::memcmp(r.take(sizeof kCheckpointMagic), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw ChecksumError("bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionError("format version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  const auto variant = r.get<std::uint32_t>();
  if (variant > 2) throw VersionError("unknown variant tag " + std::to_string(variant));
  if (expected && detail::variant_code(*expected) != variant)
    throw VersionError(std::string("checkpoint variant ") +
                       models::to_string(static_cast<models::VariantTag>(variant)) + " does not match " +
                       models::to_string(*expected));
  Checkpoint ck;
  ck.config = nlohmann::json::parse(r.get_string()).get<TrainConfig>();
  ck.iter = r.get<std::uint64_t>();
  ck.phase = static_cast<Phase>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    if (r.get<std::uint8_t>() != 1) throw VersionError("unsupported tensor dtype in " + name);
    const auto rank = r.get<std::uint32_t>();
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.get<std::int64_t>()));
    Tensor<float> t(shape);
    std::memcpy(t.data(), r.take(t.size() * sizeof(float)), t.size() * sizeof(float));
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const auto bytes = encode_checkpoint(ck);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot rename " + tmp + " to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path, std::optional<models::VariantTag> expected = std::nullopt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected);
}

// Model parameters only (drops optimizer state).
inline nn::ParameterSet<float> model_tensors(const Checkpoint& ck) {
  nn::ParameterSet<float> out;
  for (const auto& [k, v] : ck.tensors)
    if (!std::string_view(k).starts_with("adam/")) out[k] = v;
  return out;
}

inline models::CompletionModel<float> model_from_checkpoint(const Checkpoint& ck) {
  auto m = models::CompletionModel<float>::specs_only(ck.config.model_options());
  m.params = model_tensors(ck);
  return m;
}

}  // namespace vinpaint::train
