#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "transcut/errors.hpp"
#include "transcut/flow.hpp"
#include "transcut/lightfield.hpp"

namespace transcut {

/// Middlebury .flo magic: the float32 202021.25, bytes "PIEH".
inline constexpr float kFloMagic = 202021.25f;

namespace detail {

static_assert(std::endian::native == std::endian::little, ".flo I/O assumes a little-endian host");

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace detail

inline FlowField parse_flo(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  if (bytes.size() < 4) throw FlowFormatError(FlowFormatError::Kind::Truncated, name + ": truncated header");
  if (detail::read_le<float>(bytes.data()) != kFloMagic)
    throw FlowFormatError(FlowFormatError::Kind::BadMagic, name + ": bad .flo magic");
  if (bytes.size() < 12) throw FlowFormatError(FlowFormatError::Kind::Truncated, name + ": truncated header");
  const auto w = detail::read_le<std::int32_t>(bytes.data() + 4);
  const auto h = detail::read_le<std::int32_t>(bytes.data() + 8);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20))
    throw FlowFormatError(FlowFormatError::Kind::BadHeader, name + ": implausible dimensions");
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < 12 + count * 8)
    throw FlowFormatError(FlowFormatError::Kind::Truncated,
                          name + ": payload holds " + std::to_string((bytes.size() - 12) / 8) + " of " +
                              std::to_string(count) + " vectors");
  FlowField f(w, h);
  const unsigned char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < count; ++i, p += 8) {
    f.du.data[i] = detail::read_le<float>(p);
    f.dv.data[i] = detail::read_le<float>(p + 4);
    f.unknown_count += is_unknown_flow(f.du.data[i]) || is_unknown_flow(f.dv.data[i]);
  }
  return f;
}

inline FlowField load_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FlowFormatError(FlowFormatError::Kind::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_flo(bytes, path.string());
}

inline std::vector<unsigned char> encode_flo(const FlowField& f) {
  std::vector<unsigned char> out(12 + f.du.size() * 8);
  const std::int32_t w = f.width(), h = f.height();
  std::memcpy(out.data(), &kFloMagic, 4);
  std::memcpy(out.data() + 4, &w, 4);
  std::memcpy(out.data() + 8, &h, 4);
  unsigned char* p = out.data() + 12;
  for (std::size_t i = 0; i < f.du.size(); ++i, p += 8) {
    std::memcpy(p, &f.du.data[i], 4);
    std::memcpy(p + 4, &f.dv.data[i], 4);
  }
  return out;
}

inline void write_flo(const FlowField& f, const std::filesystem::path& path) {
  const auto bytes = encode_flo(f);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FlowFormatError(FlowFormatError::Kind::Io, "cannot write " + path.string());
}

/// Cache file name for one direction ('f' or 'b') of a viewpoint, keyed by
/// its integer grid offset: flow_f_<s>_<t>.flo.
inline std::string flow_file_name(char direction, int ds, int dt) {
  return std::string("flow_") + direction + "_" + std::to_string(ds) + "_" + std::to_string(dt) + ".flo";
}

/// Imports forward/backward flows for every non-center view of lf.
inline std::vector<FlowPair> load_flow_dir(const std::filesystem::path& dir, const LightField& lf) {
  if (!std::filesystem::is_directory(dir)) throw FlowSourceMissing("flow directory " + dir.string() + " does not exist");
  std::vector<FlowPair> pairs;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    if (i == lf.center_index) continue;
    const auto [ds, dt] = lf.offset(lf.cells[i]);
    FlowPair p;
    p.viewpoint = lf.viewpoints[i];
    p.cell = lf.cells[i];
    for (char dir_ch : {'f', 'b'}) {
      const auto path = dir / flow_file_name(dir_ch, ds, dt);
      if (!std::filesystem::exists(path)) throw FlowSourceMissing(path.string() + " not found");
      FlowField f = load_flo(path);
      if (f.width() != lf.width() || f.height() != lf.height())
        throw ImageSizeMismatch(path.string() + " does not match the light-field image size");
      (dir_ch == 'f' ? p.forward : p.backward) = std::move(f);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void write_flow_dir(const std::vector<FlowPair>& pairs, const LightField& lf, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& p : pairs) {
    const auto [ds, dt] = lf.offset(p.cell);
    write_flo(p.forward, dir / flow_file_name('f', ds, dt));
    write_flo(p.backward, dir / flow_file_name('b', ds, dt));
  }
}

}  // namespace transcut
