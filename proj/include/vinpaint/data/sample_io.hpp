#pragma once

// Sample files and the dataset manifest.
//
// Sample file (little-endian):
//   "VINPSMPL" | u32 version | u32 F, H, W, C | u32 n, n bytes source id |
//   i64 frame offset | F*H*W*C f32 pixels | u8 has_mask | ceil(F*H*W / 8) mask bytes
//   (bit i of the mask is element i, LSB first; present only when has_mask = 1)

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vinpaint/data/pipeline.hpp"

namespace vinpaint::data {

static_assert(std::endian::native == std::endian::little, "sample I/O assumes a little-endian host");

inline constexpr char kSampleMagic[8] = {'V', 'I', 'N', 'P', 'S', 'M', 'P', 'L'};
inline constexpr std::uint32_t kSampleVersion = 1;

inline std::vector<std::uint8_t> pack_mask(const MaskVolume& m) {
  std::vector<std::uint8_t> bits((m.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return bits;
}

inline void write_sample(const Sample& s, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  auto put = [&](const auto& v) { f.write(reinterpret_cast<const char*>(&v), sizeof v); };
  f.write(kSampleMagic, sizeof kSampleMagic);
  put(kSampleVersion);
  for (int d : s.clean.shape()) put(static_cast<std::uint32_t>(d));
  put(static_cast<std::uint32_t>(s.source_id.size()));
  f.write(s.source_id.data(), static_cast<std::streamsize>(s.source_id.size()));
  put(static_cast<std::int64_t>(s.frame_offset));
  f.write(reinterpret_cast<const char*>(s.clean.data()), static_cast<std::streamsize>(s.clean.size() * sizeof(float)));
  const std::uint8_t has_mask = s.mask.empty() ? 0 : 1;
  put(has_mask);
  if (has_mask) {
    require_same_grid(s.clean, s.mask, "write_sample");
    const auto bits = pack_mask(s.mask);
    f.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  }
  if (!f) throw IoError("short write to " + path);
}

inline Sample read_sample(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    if (n > bytes.size() - pos) throw IoError(path + ": truncated sample file");
    const char* p = bytes.data() + pos;
    pos += n;
    return p;
  };
  auto get = [&]<typename U>(U) {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return v;
  };
  if (std::memcmp(take(sizeof kSampleMagic), kSampleMagic, sizeof kSampleMagic) != 0)
    throw IoError(path + ": not a sample file");
  if (get(std::uint32_t{}) != kSampleVersion) throw VersionError(path + ": unsupported sample version");
  Shape shape(4);
  for (auto& d : shape) d = static_cast<int>(get(std::uint32_t{}));
  Sample s;
  const auto id_len = get(std::uint32_t{});
  s.source_id.assign(take(id_len), id_len);
  s.frame_offset = static_cast<int>(get(std::int64_t{}));
  s.clean = VideoVolume(shape);
  std::memcpy(s.clean.data(), take(s.clean.size() * sizeof(float)), s.clean.size() * sizeof(float));
  if (get(std::uint8_t{})) {
    s.mask = MaskVolume(shape[0], shape[1], shape[2]);
    const auto* bits = reinterpret_cast<const std::uint8_t*>(take((s.mask.size() + 7) / 8));
    for (std::size_t i = 0; i < s.mask.size(); ++i) s.mask[i] = (bits[i / 8] >> (i % 8)) & 1u;
  }
  return s;
}

struct ManifestEntry {
  std::string file;  // relative to the manifest's directory
  std::string source_id;
  int frame_offset = 0;
  std::string split;  // "train" or "val"
};

struct Manifest {
  int version = 1;
  int sample_frames = 32;
  int target_size = 128;
  Rgb mean_pixel{0.5f, 0.5f, 0.5f};
  std::vector<ManifestEntry> samples;
};

inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = {{"file", e.file}, {"source_id", e.source_id}, {"frame_offset", e.frame_offset}, {"split", e.split}};
}
inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
  j.at("file").get_to(e.file);
  j.at("source_id").get_to(e.source_id);
  j.at("frame_offset").get_to(e.frame_offset);
  j.at("split").get_to(e.split);
}
inline void to_json(nlohmann::json& j, const Manifest& m) {
  j = {{"version", m.version},         {"sample_frames", m.sample_frames}, {"target_size", m.target_size},
       {"mean_pixel", m.mean_pixel},   {"samples", m.samples}};
}
inline void from_json(const nlohmann::json& j, Manifest& m) {
  j.at("version").get_to(m.version);
  j.at("sample_frames").get_to(m.sample_frames);
  j.at("target_size").get_to(m.target_size);
  j.at("mean_pixel").get_to(m.mean_pixel);
  j.at("samples").get_to(m.samples);
}

inline void write_manifest(const Manifest& m, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << nlohmann::json(m).dump(2) << '\n';
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  try {
    return nlohmann::json::parse(f).get<Manifest>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

// Loads every sample of the given split ("train" or "val").
inline std::vector<Sample> load_split(const Manifest& m, const std::string& manifest_path, const std::string& split) {
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  std::vector<Sample> out;
  for (const auto& e : m.samples)
    if (e.split == split) out.push_back(read_sample((dir / e.file).string()));
  return out;
}

}  // namespace vinpaint::data
