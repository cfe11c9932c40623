#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "humot/io/binary.hpp"
#include "humot/mocap/chunks.hpp"
#include "humot/mocap/template_io.hpp"

namespace humot {

// Dataset directory layout:
//
//   manifest.txt           human-readable index (below)
//   templates/<id>.tpl     skeleton templates (template text format)
//   chunks/<n>.hmck        chunk payloads
//
// manifest.txt, one record per line:
//
//   format_version 1
//   generic <topology id> <template file>
//   template <template id> <topology id> <template file>
//   source <source id> axes=<x,y,z> unit=<meters per input unit> fps=<Hz>
//   chunk <file> template=<id> topology=<id> split=<train|validation>
//         source=<id> start=<frame> offset=<x>,<y>,<z>
//
// Chunk payload (little-endian):
//   "HMCK"  u32 version(1)  u32 J  u32 F
//   J*3*F float32, joint-major, then axis, then frame
//   u32 CRC-32 of all preceding bytes

inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::uint32_t kChunkFormatVersion = 1;

/// How a source's coordinates were mapped into the canonical Z-up meter
/// frame. `axes[i]` names the source axis feeding canonical axis i, with a
/// sign, e.g. {"x", "-z", "y"}.
struct SourceInfo {
  std::string id;
  std::vector<std::string> axes{"x", "y", "z"};
  double unit = 1.0;
  double framerate = kModelFramerate;

  bool operator==(const SourceInfo&) const = default;
};

struct Dataset {
  /// Generic neutral pose per topology id.
  std::map<std::string, SkeletonTemplate> generics;
  /// Character templates by template id.
  std::map<std::string, SkeletonTemplate> templates;
  std::vector<SourceInfo> sources;
  std::vector<Chunk> chunks;

  const SkeletonTemplate& template_for(const Chunk& c) const {
    auto it = templates.find(c.template_ref);
    if (it == templates.end()) throw DataError("chunk references unknown template '" + c.template_ref + "'");
    return it->second;
  }

  std::vector<const Chunk*> split(Split s) const {
    std::vector<const Chunk*> out;
    for (const auto& c : chunks)
      if (c.split == s) out.push_back(&c);
    return out;
  }
};

/// Rounds positions to float32, the precision of the on-disk payload.
inline MotionSequence quantize_float32(const MotionSequence& seq) {
  MotionSequence out = seq;
  for (double& v : out.data()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

// ---------------------------------------------------------------------------
// Chunk payloads

inline std::vector<std::uint8_t> encode_chunk_payload(const MotionSequence& seq) {
  io::Writer w;
  w.put_magic("HMCK");
  w.put(kChunkFormatVersion);
  w.put(static_cast<std::uint32_t>(seq.joint_count()));
  w.put(static_cast<std::uint32_t>(seq.frame_count()));
  for (double v : seq.data()) w.put(static_cast<float>(v));
  w.put_crc();
  return w.bytes();
}

inline void write_chunk_file(const std::filesystem::path& path, const MotionSequence& seq) {
  const auto bytes = encode_chunk_payload(seq);
  io::Writer w;
  w.put_bytes(bytes.data(), bytes.size());
  w.save(path);
}

/// Reads a payload whose joints follow `topo`.
inline MotionSequence read_chunk_file(const std::filesystem::path& path, const SkeletonTopology& topo,
                                      double framerate = kModelFramerate) {
  auto r = io::Reader::open(path);
  r.expect_magic("HMCK");
  r.expect_version(kChunkFormatVersion);
  const auto J = r.get<std::uint32_t>();
  const auto F = r.get<std::uint32_t>();
  if (F == 0 || J == 0 || J > 100000 || F > 10000000) r.fail(FileErrorCode::kMalformed, "implausible J or F");
  r.expect_total_size(16 + std::uint64_t{J} * 3 * F * 4 + 4);
  r.verify_trailing_crc();
  if (static_cast<int>(J) != topo.joint_count())
    r.fail(FileErrorCode::kMalformed, "payload has " + std::to_string(J) + " joints, topology '" + topo.id() + "' has " +
                                          std::to_string(topo.joint_count()));
  std::vector<double> data(static_cast<std::size_t>(J) * 3 * F);
  for (double& v : data) v = static_cast<double>(r.get<float>());
  r.expect_end();
  return MotionSequence(topo, std::move(data), static_cast<int>(F), framerate);
}

// ---------------------------------------------------------------------------
// Manifest

namespace detail {

inline std::string join_axes(const std::vector<std::string>& axes) {
  std::string s;
  for (std::size_t i = 0; i < axes.size(); ++i) s += (i ? "," : "") + axes[i];
  return s;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string chunk_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chunks/%06zu.hmck", i);
  return buf;
}

}  // namespace detail

/// Writes the manifest, every template and every chunk payload. Chunk
/// positions are stored as float32.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "templates");
  fs::create_directories(dir / "chunks");
  std::ostringstream m;
  m << "# humot dataset manifest\n";
  m << "format_version " << kDatasetFormatVersion << "\n";
  for (const auto& [topo_id, t] : ds.generics) {
    const std::string file = "templates/generic_" + topo_id + ".tpl";
    save_template(dir / file, t, "generic_" + topo_id);
    m << "generic " << topo_id << ' ' << file << "\n";
  }
  for (const auto& [id, t] : ds.templates) {
    const std::string file = "templates/" + id + ".tpl";
    save_template(dir / file, t, id);
    m << "template " << id << ' ' << t.topology.id() << ' ' << file << "\n";
  }
  for (const auto& s : ds.sources)
    m << "source " << s.id << " axes=" << detail::join_axes(s.axes) << " unit=" << detail::format_double(s.unit)
      << " fps=" << detail::format_double(s.framerate) << "\n";
  for (std::size_t i = 0; i < ds.chunks.size(); ++i) {
    const Chunk& c = ds.chunks[i];
    const SkeletonTemplate& t = ds.template_for(c);
    if (!c.positions.topology().same_structure(t.topology))
      throw DataError("chunk " + std::to_string(i) + " does not match the topology of template '" + c.template_ref + "'");
    const std::string file = detail::chunk_file_name(i);
    write_chunk_file(dir / file, c.positions);
    m << "chunk " << file << " template=" << c.template_ref << " topology=" << t.topology.id()
      << " split=" << to_string(c.split) << " source=" << (c.source_id.empty() ? "-" : c.source_id)
      << " start=" << c.start_frame << " offset=" << detail::format_double(c.mean_offset.x()) << ','
      << detail::format_double(c.mean_offset.y()) << ',' << detail::format_double(c.mean_offset.z()) << "\n";
  }
  std::ofstream os(dir / "manifest.txt", std::ios::trunc);
  if (!os) throw FileError(FileErrorCode::kIo, (dir / "manifest.txt").string(), "cannot open for writing");
  os << m.str();
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream is(manifest_path);
  if (!is) throw FileError(FileErrorCode::kIo, manifest_path.string(), "cannot open manifest");
  Dataset ds;
  bool have_version = false;
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const std::string at = manifest_path.string() + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    auto malformed = [&](const std::string& why) {
      throw FileError(FileErrorCode::kMalformed, at, why);
    };
    // key=value fields after the positional ones
    auto fields = [&](std::size_t from) {
      std::map<std::string, std::string> kv;
      for (std::size_t i = from; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) malformed("expected key=value, got '" + tok[i] + "'");
        kv[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
      }
      return kv;
    };
    auto need = [&](const std::map<std::string, std::string>& kv, const std::string& k) -> const std::string& {
      auto it = kv.find(k);
      if (it == kv.end()) malformed("missing field '" + k + "'");
      return it->second;
    };
    if (key == "format_version") {
      if (tok.size() != 2) malformed("format_version expects one value");
      if (tok[1] != std::to_string(kDatasetFormatVersion))
        throw FileError(FileErrorCode::kVersionMismatch, at, "manifest version " + tok[1]);
      have_version = true;
    } else if (!have_version) {
      throw FileError(FileErrorCode::kVersionMismatch, at, "manifest must start with format_version");
    } else if (key == "generic") {
      if (tok.size() != 3) malformed("generic expects <topology> <file>");
      auto t = load_template(dir / tok[2]);
      if (t.skeleton.topology.id() != tok[1]) malformed("generic template topology differs from '" + tok[1] + "'");
      ds.generics.emplace(tok[1], std::move(t.skeleton));
    } else if (key == "template") {
      if (tok.size() != 4) malformed("template expects <id> <topology> <file>");
      auto t = load_template(dir / tok[3]);
      if (t.skeleton.topology.id() != tok[2]) malformed("template topology differs from '" + tok[2] + "'");
      ds.templates.emplace(tok[1], std::move(t.skeleton));
    } else if (key == "source") {
      if (tok.size() < 2) malformed("source expects an id");
      const auto kv = fields(2);
      SourceInfo s;
      s.id = tok[1];
      s.axes = detail::split_on(need(kv, "axes"), ',');
      s.unit = detail::parse_double(need(kv, "unit"), at);
      s.framerate = detail::parse_double(need(kv, "fps"), at);
      ds.sources.push_back(std::move(s));
    } else if (key == "chunk") {
      if (tok.size() < 2) malformed("chunk expects a file");
      const auto kv = fields(2);
      Chunk c;
      c.template_ref = need(kv, "template");
      auto it = ds.templates.find(c.template_ref);
      if (it == ds.templates.end()) malformed("chunk references unknown template '" + c.template_ref + "'");
      if (it->second.topology.id() != need(kv, "topology")) malformed("chunk topology differs from its template");
      const std::string& split = need(kv, "split");
      if (split == "train")
        c.split = Split::kTrain;
      else if (split == "validation")
        c.split = Split::kValidation;
      else
        malformed("unknown split '" + split + "'");
      c.source_id = need(kv, "source");
      if (c.source_id == "-") c.source_id.clear();
      c.start_frame = static_cast<int>(detail::parse_double(need(kv, "start"), at));
      const auto off = detail::split_on(need(kv, "offset"), ',');
      if (off.size() != 3) malformed("offset expects three components");
      for (int a = 0; a < 3; ++a) c.mean_offset[a] = detail::parse_double(off[a], at);
      c.positions = read_chunk_file(dir / tok[1], it->second.topology);
      ds.chunks.push_back(std::move(c));
    } else {
      malformed("unknown record '" + key + "'");
    }
  }
  return ds;
}

}  // namespace humot
