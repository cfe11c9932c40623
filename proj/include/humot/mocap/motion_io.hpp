#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "humot/io/binary.hpp"
#include "humot/mocap/template_io.hpp"
#include "humot/model/autoencoder.hpp"

namespace humot {

// Motion file (little-endian):
//   "HMMO"  u32 version(1)  u64 file size
//   string  template text of the skeleton (neutral pose + topology)
//   f64     framerate   u32 J   u32 F
//   J*3*F   float64, joint-major, then axis, then frame
//   u32     CRC-32 of all preceding bytes
//
// Latent file:
//   "HMLZ"  u32 version(1)  u64 file size  u32 Z  u32 F  f64 framerate
//   Z*F     float64, row-major (latent channel, then frame)
//   u32     CRC-32

inline constexpr std::uint32_t kMotionFormatVersion = 1;
inline constexpr std::uint32_t kLatentFormatVersion = 1;

/// A motion together with the template of the character performing it.
struct MotionFile {
  MotionSequence motion;
  SkeletonTemplate skeleton;
};

namespace detail {

inline void patch_size_and_save(io::Writer& w, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = w.bytes();
  const std::uint64_t total = bytes.size() + 4;
  std::memcpy(bytes.data() + 8, &total, sizeof total);
  io::Writer out;
  out.put_bytes(bytes.data(), bytes.size());
  out.put_crc();
  out.save(path);
}

}  // namespace detail

inline void save_motion(const std::filesystem::path& path, const MotionSequence& seq, const SkeletonTemplate& skeleton) {
  if (!seq.topology().same_structure(skeleton.topology))
    throw DataError("save_motion: sequence and template topologies differ");
  std::ostringstream tpl;
  write_template(tpl, skeleton, skeleton.topology.id());
  io::Writer w;
  w.put_magic("HMMO");
  w.put(kMotionFormatVersion);
  w.put(std::uint64_t{0});
  w.put_string(tpl.str());
  w.put(seq.framerate());
  w.put(static_cast<std::uint32_t>(seq.joint_count()));
  w.put(static_cast<std::uint32_t>(seq.frame_count()));
  for (double v : seq.data()) w.put(v);
  detail::patch_size_and_save(w, path);
}

inline MotionFile load_motion(const std::filesystem::path& path) {
  auto r = io::Reader::open(path);
  r.expect_magic("HMMO");
  r.expect_version(kMotionFormatVersion);
  r.expect_total_size(r.get<std::uint64_t>());
  r.verify_trailing_crc();
  std::istringstream tpl(r.get_string());
  NamedTemplate t = read_template(tpl, path.string());
  const double fps = r.get<double>();
  const auto J = r.get<std::uint32_t>();
  const auto F = r.get<std::uint32_t>();
  if (static_cast<int>(J) != t.skeleton.joint_count()) r.fail(FileErrorCode::kMalformed, "joint count differs from template");
  if (r.remaining() != std::uint64_t{J} * 3 * F * 8) r.fail(FileErrorCode::kMalformed, "payload size differs from J x 3 x F");
  std::vector<double> data(static_cast<std::size_t>(J) * 3 * F);
  for (double& v : data) v = r.get<double>();
  r.expect_end();
  MotionSequence seq(t.skeleton.topology, std::move(data), static_cast<int>(F), fps);
  return {std::move(seq), std::move(t.skeleton)};
}

inline void save_latent(const std::filesystem::path& path, const LatentCode& z, double framerate) {
  io::Writer w;
  w.put_magic("HMLZ");
  w.put(kLatentFormatVersion);
  w.put(std::uint64_t{0});
  w.put(static_cast<std::uint32_t>(z.size()));
  w.put(static_cast<std::uint32_t>(z.frame_count()));
  w.put(framerate);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) w.put(z.values.data()[i]);
  detail::patch_size_and_save(w, path);
}

struct LatentFile {
  LatentCode code;
  double framerate = 30.0;
};

inline LatentFile load_latent(const std::filesystem::path& path) {
  auto r = io::Reader::open(path);
  r.expect_magic("HMLZ");
  r.expect_version(kLatentFormatVersion);
  r.expect_total_size(r.get<std::uint64_t>());
  r.verify_trailing_crc();
  const auto Z = r.get<std::uint32_t>();
  const auto F = r.get<std::uint32_t>();
  LatentFile out;
  out.framerate = r.get<double>();
  if (r.remaining() != std::uint64_t{Z} * F * 8) r.fail(FileErrorCode::kMalformed, "payload size differs from Z x F");
  out.code.values.resize(Z, F);
  for (Eigen::Index i = 0; i < out.code.values.size(); ++i) out.code.values.data()[i] = r.get<double>();
  r.expect_end();
  return out;
}

}  // namespace humot
