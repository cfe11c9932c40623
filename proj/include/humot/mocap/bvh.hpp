#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "humot/mocap/angular.hpp"
#include "humot/mocap/template_io.hpp"

namespace humot {

// ---------------------------------------------------------------------------
// Axis and unit conversion

/// Signed axis permutation plus unit scale into the canonical Z-up meter
/// frame: canonical[i] = sign[i] * unit * source[source_axis[i]].
struct AxisConversion {
  int source_axis[3] = {0, 1, 2};
  int sign[3] = {1, 1, 1};
  double unit = 1.0;

  /// Parses e.g. {"x", "-z", "y"}.
  static AxisConversion parse(const std::vector<std::string>& axes, double unit) {
    if (axes.size() != 3) throw DataError("axis conversion needs three axes");
    if (!(unit > 0.0) || !std::isfinite(unit)) throw DataError("axis conversion unit must be positive");
    AxisConversion c;
    c.unit = unit;
    bool used[3] = {false, false, false};
    for (int i = 0; i < 3; ++i) {
      std::string a = axes[i];
      c.sign[i] = 1;
      if (!a.empty() && (a[0] == '-' || a[0] == '+')) {
        c.sign[i] = a[0] == '-' ? -1 : 1;
        a = a.substr(1);
      }
      if (a.size() != 1 || a[0] < 'x' || a[0] > 'z') throw DataError("axis conversion: bad axis '" + axes[i] + "'");
      c.source_axis[i] = a[0] - 'x';
      if (used[c.source_axis[i]]) throw DataError("axis conversion: axis '" + a + "' used twice");
      used[c.source_axis[i]] = true;
    }
    return c;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (int i = 0; i < 3; ++i) out.push_back((sign[i] < 0 ? "-" : "") + std::string(1, static_cast<char>('x' + source_axis[i])));
    return out;
  }

  /// Signed permutation matrix (without the unit scale).
  Mat3 matrix() const {
    Mat3 m = Mat3::Zero();
    for (int i = 0; i < 3; ++i) m(i, source_axis[i]) = sign[i];
    return m;
  }

  Vec3 apply(const Vec3& v) const {
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = sign[i] * v[source_axis[i]] * unit;
    return out;
  }

  AxisConversion inverse() const {
    AxisConversion inv;
    for (int i = 0; i < 3; ++i) {
      inv.source_axis[source_axis[i]] = i;
      inv.sign[source_axis[i]] = sign[i];
    }
    inv.unit = 1.0 / unit;
    return inv;
  }

  /// Rotation expressed in the converted frame: P R P^T.
  Quat apply(const Quat& q) const {
    const Mat3 p = matrix();
    Quat out(Mat3(p * q.toRotationMatrix() * p.transpose()));
    return out.normalized();
  }
};

inline MotionSequence convert_axes(const MotionSequence& seq, const AxisConversion& c) {
  MotionSequence out(seq.topology(), seq.frame_count(), seq.framerate());
  for (int j = 0; j < seq.joint_count(); ++j)
    for (int f = 0; f < seq.frame_count(); ++f) out.set_point(j, f, c.apply(seq.point(j, f)));
  return out;
}

inline AngularClip convert_axes(const AngularClip& clip, const AxisConversion& c) {
  AngularClip out = clip;
  for (int j = 0; j < clip.joint_count(); ++j) out.offsets.row(j) = c.apply(Vec3(clip.offsets.row(j).transpose())).transpose();
  for (auto& frame : out.rotations)
    for (auto& q : frame) q = c.apply(q);
  for (auto& t : out.root_translation) t = c.apply(t);
  return out;
}

// ---------------------------------------------------------------------------
// Joint roles

/// Landmark and major-joint assignment by joint name. Names are matched
/// case-insensitively after removing '_', '-', '.' and spaces.
struct JointRoles {
  std::map<std::string, std::string> landmarks;  // landmark -> joint name
  std::vector<std::string> major;                // joint names

  bool empty() const { return landmarks.empty() && major.empty(); }
};

namespace detail {

inline std::string name_key(const std::string& s) {
  std::string k;
  for (char c : s)
    if (c != '_' && c != '-' && c != '.' && c != ' ') k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return k;
}

/// -1 left, +1 right, 0 unknown.
inline int name_side(const std::string& name) {
  const std::string k = name_key(name);
  if (k.rfind("left", 0) == 0) return -1;
  if (k.rfind("right", 0) == 0) return 1;
  if (name.size() > 1 && (name[0] == 'l' || name[0] == 'L') &&
      (name[1] == '_' || name[1] == '.' || std::isupper(static_cast<unsigned char>(name[1]))))
    return -1;
  if (name.size() > 1 && (name[0] == 'r' || name[0] == 'R') &&
      (name[1] == '_' || name[1] == '.' || std::isupper(static_cast<unsigned char>(name[1]))))
    return 1;
  return 0;
}

/// Name without its side prefix.
inline std::string name_body(const std::string& name) {
  std::string k = name_key(name);
  for (const char* p : {"left", "right"})
    if (k.rfind(p, 0) == 0) return k.substr(std::string(p).size());
  if (name_side(name) != 0) return k.substr(1);
  return k;
}

inline bool body_is(const std::string& body, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (body == o) return true;
  return false;
}

}  // namespace detail

/// Guesses landmarks and major joints from common naming schemes
/// (Hips/LeftUpLeg/LeftLeg/LeftFoot, l_hip/l_knee/l_ankle, ...).
inline JointRoles guess_joint_roles(const std::vector<std::string>& names, const std::vector<int>& parents) {
  using detail::body_is;
  JointRoles roles;
  int root = -1;
  for (std::size_t j = 0; j < names.size(); ++j)
    if (parents[j] < 0) root = static_cast<int>(j);
  if (root >= 0) roles.landmarks["pelvis"] = names[root];
  auto pick = [&](const char* landmark, int side, std::initializer_list<std::initializer_list<const char*>> tiers) {
    for (auto tier : tiers)
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (static_cast<int>(j) == root) continue;
        if (side != 0 && detail::name_side(names[j]) != side) continue;
        if (body_is(detail::name_body(names[j]), tier)) {
          roles.landmarks[landmark] = names[j];
          return;
        }
      }
  };
  pick("left_hip", -1, {{"upleg", "hip", "thigh", "upperleg", "femur"}});
  pick("right_hip", 1, {{"upleg", "hip", "thigh", "upperleg", "femur"}});
  pick("left_shoulder", -1, {{"arm", "upperarm", "humerus"}, {"shoulder"}});
  pick("right_shoulder", 1, {{"arm", "upperarm", "humerus"}, {"shoulder"}});
  pick("left_foot", -1, {{"toe", "toebase", "toes", "toeend"}, {"foot", "ankle"}});
  pick("right_foot", 1, {{"toe", "toebase", "toes", "toeend"}, {"foot", "ankle"}});
  pick("head_top", 0, {{"headtop", "headend", "headsite", "head_end"}, {"head"}});
  // "Shoulder" names the clavicle in rigs that also have an upper-arm joint.
  bool has_upper_arm = false;
  for (const auto& n : names)
    if (detail::name_side(n) != 0 && body_is(detail::name_body(n), {"arm", "upperarm", "humerus"})) has_upper_arm = true;
  for (const auto& n : names) {
    if (detail::name_side(n) == 0) continue;
    if (!has_upper_arm && detail::name_body(n) == "shoulder") {
      roles.major.push_back(n);
      continue;
    }
    if (body_is(detail::name_body(n), {"upleg", "hip", "thigh", "upperleg", "femur", "leg", "knee", "shin", "calf",
                                       "lowerleg", "tibia", "foot", "ankle", "arm", "upperarm", "humerus", "forearm",
                                       "elbow", "lowerarm", "hand", "wrist"}))
      roles.major.push_back(n);
  }
  return roles;
}

inline Landmarks resolve_landmarks(const JointRoles& roles, const std::vector<std::string>& names) {
  Landmarks lm;
  for (const auto& [role, joint] : roles.landmarks) {
    const auto it = std::find(names.begin(), names.end(), joint);
    if (it == names.end()) throw DataError("joint roles: unknown joint '" + joint + "' for landmark " + role);
    bool known = false;
    lm.for_each([&](const char* name, int& idx) {
      if (role == name) {
        idx = static_cast<int>(it - names.begin());
        known = true;
      }
    });
    if (!known) throw DataError("joint roles: unknown landmark '" + role + "'");
  }
  return lm;
}

// ---------------------------------------------------------------------------
// BVH

/// Parsed hierarchy and channel data before conversion.
struct BvhFile {
  struct Joint {
    std::string name;
    int parent = -1;
    Vec3 offset = Vec3::Zero();
    std::vector<std::string> channels;
  };
  std::vector<Joint> joints;
  double frame_time = 1.0 / 30.0;
  std::vector<std::vector<double>> frames;  // channel values per frame
};

namespace detail {

class BvhTokens {
 public:
  BvhTokens(std::istream& is, std::string where) : where_(std::move(where)) {
    for (std::string line; std::getline(is, line);) {
      ++line_;
      std::istringstream ls(line);
      for (std::string tok; ls >> tok;) toks_.push_back({tok, line_});
    }
  }
  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const {
    if (done()) fail("unexpected end of file");
    return toks_[pos_].text;
  }
  std::string next() {
    const std::string& t = peek();
    ++pos_;
    return t;
  }
  void expect(const std::string& s) {
    const std::string t = next();
    if (t != s) fail("expected '" + s + "', got '" + t + "'");
  }
  double number() {
    const std::string t = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      fail("expected a number, got '" + t + "'");
    }
  }
  [[noreturn]] void fail(const std::string& why) const {
    const int line = pos_ < toks_.size() ? toks_[pos_].line : line_;
    throw FileError(FileErrorCode::kMalformed, where_ + ":" + std::to_string(line), why);
  }

 private:
  struct Tok {
    std::string text;
    int line;
  };
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
  int line_ = 0;
  std::string where_;
};

inline void parse_bvh_joint(BvhTokens& t, BvhFile& out, int parent, bool is_end) {
  BvhFile::Joint joint;
  joint.parent = parent;
  joint.name = is_end ? out.joints[parent].name + "_end" : t.next();
  if (is_end) t.next();  // "Site"
  t.expect("{");
  t.expect("OFFSET");
  for (int a = 0; a < 3; ++a) joint.offset[a] = t.number();
  // Zero-length end sites carry no geometry and are dropped.
  if (is_end) {
    t.expect("}");
    if (joint.offset.norm() > 0.0) out.joints.push_back(std::move(joint));
    return;
  }
  if (t.peek() == "CHANNELS") {
    t.next();
    const int n = static_cast<int>(t.number());
    if (n < 0 || n > 6) t.fail("channel count out of range");
    for (int i = 0; i < n; ++i) joint.channels.push_back(t.next());
  }
  const int self = static_cast<int>(out.joints.size());
  out.joints.push_back(std::move(joint));
  while (t.peek() != "}") {
    const std::string kw = t.next();
    if (kw == "JOINT")
      parse_bvh_joint(t, out, self, false);
    else if (kw == "End")
      parse_bvh_joint(t, out, self, true);
    else
      t.fail("unexpected '" + kw + "' in joint " + out.joints[self].name);
  }
  t.expect("}");
}

}  // namespace detail

inline BvhFile parse_bvh(std::istream& is, const std::string& where) {
  detail::BvhTokens t(is, where);
  BvhFile out;
  t.expect("HIERARCHY");
  t.expect("ROOT");
  detail::parse_bvh_joint(t, out, -1, false);
  t.expect("MOTION");
  t.expect("Frames:");
  const double frames = t.number();
  if (frames < 1 || frames != std::floor(frames)) t.fail("frame count must be a positive integer");
  t.expect("Frame");
  t.expect("Time:");
  out.frame_time = t.number();
  if (!(out.frame_time > 0.0)) t.fail("frame time must be positive");
  std::size_t channels = 0;
  for (const auto& j : out.joints) channels += j.channels.size();
  for (int f = 0; f < static_cast<int>(frames); ++f) {
    std::vector<double> row(channels);
    for (double& v : row) v = t.number();
    out.frames.push_back(std::move(row));
  }
  if (!t.done()) t.fail("trailing data after the last frame");
  return out;
}

inline BvhFile load_bvh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for reading");
  return parse_bvh(is, path.string());
}

/// Topology and angular clip from a parsed file. Joints keep file order;
/// end sites become leaf joints named "<parent>_end". Rotation channels
/// compose in the order listed.
inline AngularClip bvh_to_clip(const BvhFile& bvh, const std::string& topology_id, JointRoles roles = {}) {
  std::vector<std::string> names;
  std::vector<int> parents;
  for (const auto& j : bvh.joints) {
    names.push_back(j.name);
    parents.push_back(j.parent);
  }
  if (roles.empty()) roles = guess_joint_roles(names, parents);
  std::vector<bool> major(names.size(), false);
  for (const auto& n : roles.major) {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) throw DataError("joint roles: unknown major joint '" + n + "'");
    major[it - names.begin()] = true;
  }
  AngularClip clip;
  clip.topology = SkeletonTopology(topology_id, names, parents, major, resolve_landmarks(roles, names));
  clip.framerate = 1.0 / bvh.frame_time;
  const int J = static_cast<int>(names.size());
  clip.offsets.resize(J, 3);
  for (int j = 0; j < J; ++j) clip.offsets.row(j) = bvh.joints[j].offset.transpose();
  for (const auto& row : bvh.frames) {
    std::vector<Quat> rot(J, Quat::Identity());
    Vec3 translation = Vec3::Zero();
    std::size_t c = 0;
    for (int j = 0; j < J; ++j) {
      Quat q = Quat::Identity();
      for (const auto& ch : bvh.joints[j].channels) {
        const double v = row[c++];
        if (ch.size() != 9) throw DataError("bvh: unknown channel '" + ch + "'");
        const int axis = std::tolower(static_cast<unsigned char>(ch[0])) - 'x';
        if (axis < 0 || axis > 2) throw DataError("bvh: unknown channel '" + ch + "'");
        if (ch.substr(1) == "position") {
          if (parents[j] < 0) translation[axis] = v;
        } else if (ch.substr(1) == "rotation") {
          q = q * Quat(Eigen::AngleAxisd(v * std::numbers::pi / 180.0, Vec3::Unit(axis)));
        } else {
          throw DataError("bvh: unknown channel '" + ch + "'");
        }
      }
      rot[j] = q.normalized();
    }
    clip.rotations.push_back(std::move(rot));
    clip.root_translation.push_back(translation);
  }
  return clip;
}

/// Writes a clip with ZXY rotation channels on every joint and position
/// channels on the root. Leaf joints named "*_end" are written as end sites.
inline void write_bvh(std::ostream& os, const AngularClip& clip) {
  const auto& topo = clip.topology;
  const int J = clip.joint_count();
  std::vector<std::vector<int>> children(J);
  for (int j = 0; j < J; ++j)
    if (topo.parent(j) >= 0) children[topo.parent(j)].push_back(j);
  auto is_end = [&](int j) {
    const auto& n = topo.joint_names()[j];
    return children[j].empty() && topo.parent(j) >= 0 && n.size() > 4 && n.substr(n.size() - 4) == "_end";
  };
  auto num = [](double v) { return detail::format_double(v); };
  std::vector<int> order;  // joints with channels, in file order
  auto emit = [&](auto&& self, int j, int depth) -> void {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const Vec3 off = clip.offsets.row(j).transpose();
    if (is_end(j)) {
      os << pad << "End Site\n" << pad << "{\n" << pad << "  OFFSET " << num(off.x()) << ' ' << num(off.y()) << ' '
         << num(off.z()) << "\n" << pad << "}\n";
      return;
    }
    os << pad << (depth == 0 ? "ROOT " : "JOINT ") << topo.joint_names()[j] << "\n" << pad << "{\n";
    os << pad << "  OFFSET " << num(off.x()) << ' ' << num(off.y()) << ' ' << num(off.z()) << "\n";
    os << pad << "  CHANNELS " << (depth == 0 ? "6 Xposition Yposition Zposition " : "3 ")
       << "Zrotation Xrotation Yrotation\n";
    order.push_back(j);
    for (int c : children[j]) self(self, c, depth + 1);
    os << pad << "}\n";
  };
  os << "HIERARCHY\n";
  emit(emit, topo.root(), 0);
  os << "MOTION\nFrames: " << clip.frame_count() << "\nFrame Time: " << num(1.0 / clip.framerate) << "\n";
  for (int f = 0; f < clip.frame_count(); ++f) {
    bool first = true;
    for (int j : order) {
      if (j == topo.root()) {
        const Vec3& t = clip.root_translation[f];
        os << num(t.x()) << ' ' << num(t.y()) << ' ' << num(t.z());
        first = false;
      }
      // R = Rz(a) Rx(b) Ry(c)
      const Vec3 e = clip.rotations[f][j].toRotationMatrix().eulerAngles(2, 0, 1) * (180.0 / std::numbers::pi);
      for (int k = 0; k < 3; ++k) {
        os << (first ? "" : " ") << num(e[k]);
        first = false;
      }
    }
    os << "\n";
  }
}

}  // namespace humot
