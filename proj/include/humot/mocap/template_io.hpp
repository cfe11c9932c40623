#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "humot/skeleton.hpp"

namespace humot {

// Template text format, one record per line, '#' starts a comment:
//
//   template <id>
//   topology <topology id>
//   normalized <0|1>
//   joint <name> <parent name | -> <major 0|1> <x> <y> <z>     (J lines, parents first)
//   landmark <pelvis|left_hip|...> <joint name>
//
// Coordinates are meters, written with 17 significant digits.

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": expected a number, got '" + s + "'");
  }
}

}  // namespace detail

inline void write_template(std::ostream& os, const SkeletonTemplate& t, const std::string& id) {
  const auto& topo = t.topology;
  os << "# humot skeleton template\n";
  os << "template " << id << "\n";
  os << "topology " << topo.id() << "\n";
  os << "normalized " << (t.normalized ? 1 : 0) << "\n";
  for (int j = 0; j < topo.joint_count(); ++j) {
    const int p = topo.parent(j);
    os << "joint " << topo.joint_names()[j] << ' ' << (p < 0 ? std::string("-") : topo.joint_names()[p]) << ' '
       << (topo.is_major(j) ? 1 : 0);
    for (int a = 0; a < 3; ++a) os << ' ' << detail::format_double(t.positions(j, a));
    os << "\n";
  }
  topo.landmarks().for_each([&](const char* name, int idx) {
    if (idx >= 0) os << "landmark " << name << ' ' << topo.joint_names()[idx] << "\n";
  });
}

struct NamedTemplate {
  std::string id;
  SkeletonTemplate skeleton;
};

inline NamedTemplate read_template(std::istream& is, const std::string& where) {
  std::string id, topo_id;
  bool normalized = false;
  std::vector<std::string> names;
  std::vector<std::string> parent_names;
  std::vector<bool> major;
  std::vector<Vec3> pos;
  std::vector<std::pair<std::string, std::string>> landmarks;
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const std::string at = where + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    auto arity = [&](std::size_t n) {
      if (tok.size() != n) throw DataError(at + ": '" + key + "' expects " + std::to_string(n - 1) + " fields");
    };
    if (key == "template") {
      arity(2);
      id = tok[1];
    } else if (key == "topology") {
      arity(2);
      topo_id = tok[1];
    } else if (key == "normalized") {
      arity(2);
      normalized = tok[1] == "1";
    } else if (key == "joint") {
      arity(7);
      names.push_back(tok[1]);
      parent_names.push_back(tok[2]);
      major.push_back(tok[3] == "1");
      pos.emplace_back(detail::parse_double(tok[4], at), detail::parse_double(tok[5], at),
                       detail::parse_double(tok[6], at));
    } else if (key == "landmark") {
      arity(3);
      landmarks.emplace_back(tok[1], tok[2]);
    } else {
      throw DataError(at + ": unknown record '" + key + "'");
    }
  }
  if (topo_id.empty()) throw DataError(where + ": missing 'topology' record");
  if (id.empty()) id = topo_id;
  auto index = [&](const std::string& n) -> int {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    throw DataError(where + ": unknown joint '" + n + "'");
  };
  std::vector<int> parents;
  for (const auto& p : parent_names) parents.push_back(p == "-" ? -1 : index(p));
  Landmarks lm;
  for (const auto& [role, joint] : landmarks) {
    bool known = false;
    lm.for_each([&](const char* name, int& idx) {
      if (role == name) {
        idx = index(joint);
        known = true;
      }
    });
    if (!known) throw DataError(where + ": unknown landmark '" + role + "'");
  }
  JointPositions p(static_cast<Eigen::Index>(pos.size()), 3);
  for (std::size_t i = 0; i < pos.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = pos[i].transpose();
  SkeletonTopology topo(topo_id, names, parents, major, lm);
  return {id, SkeletonTemplate(std::move(topo), std::move(p), normalized)};
}

inline void save_template(const std::filesystem::path& path, const SkeletonTemplate& t, const std::string& id) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for writing");
  write_template(os, t, id);
}

inline NamedTemplate load_template(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for reading");
  return read_template(is, path.string());
}

}  // namespace humot
