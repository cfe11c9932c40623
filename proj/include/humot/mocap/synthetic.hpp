#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "humot/mocap/angular.hpp"
#include "humot/rng.hpp"

namespace humot {

enum class MotionKind { kIdleSway, kWalkCycle, kArmWave, kSquat, kComposite };

inline MotionKind parse_motion_kind(std::string_view s) {
  if (s == "idle-sway") return MotionKind::kIdleSway;
  if (s == "walk-cycle") return MotionKind::kWalkCycle;
  if (s == "arm-wave") return MotionKind::kArmWave;
  if (s == "squat") return MotionKind::kSquat;
  if (s == "composite") return MotionKind::kComposite;
  throw DataError("unknown synthetic motion kind '" + std::string(s) + "'");
}

inline const char* to_string(MotionKind k) {
  switch (k) {
    case MotionKind::kIdleSway: return "idle-sway";
    case MotionKind::kWalkCycle: return "walk-cycle";
    case MotionKind::kArmWave: return "arm-wave";
    case MotionKind::kSquat: return "squat";
    case MotionKind::kComposite: return "composite";
  }
  return "?";
}

/// Body proportions of a generated character relative to the generic pose.
struct Morphology {
  double scale = 1.0;
  /// Left/right-symmetric per-bone factor drawn uniformly from
  /// [1 - jitter, 1 + jitter].
  double bone_jitter = 0.0;
};

struct SyntheticRequest {
  MotionKind kind = MotionKind::kWalkCycle;
  Morphology morphology;
  double duration = 1.0;   // seconds
  double framerate = 30.0;
  std::uint64_t seed = 0;
};

namespace detail {

/// Joint role with the side prefix stripped ("l_knee" -> "knee").
inline std::string_view joint_role(std::string_view name, int* side) {
  *side = 0;
  if (name.size() > 2 && (name[0] == 'l' || name[0] == 'r') && name[1] == '_') {
    *side = name[0] == 'l' ? -1 : 1;
    return name.substr(2);
  }
  return name;
}

inline bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

struct MotionParams {
  double freq;     // cycles per second
  double phase;
  double amp;      // overall amplitude multiplier
  double speed;    // forward speed for locomotion, m/s at unit scale
  int wave_side;   // which arm waves
  double sway_freq;
  double sway_phase;
};

/// Local (sagittal, frontal, twist) angles in radians; X is the left-right
/// axis, Y forward, Z up.
struct JointAngles {
  double flex = 0.0;   // about X
  double abduct = 0.0; // about Y
  double twist = 0.0;  // about Z
};

inline void add_idle(JointAngles& a, std::string_view role, int side, double t, const MotionParams& p) {
  const double s = std::sin(2 * std::numbers::pi * p.sway_freq * t + p.sway_phase);
  const double c = std::cos(2 * std::numbers::pi * p.sway_freq * t + p.sway_phase);
  if (starts_with(role, "spine")) {
    a.abduct += 0.04 * p.amp * s;
    a.flex += 0.02 * p.amp * c;
  } else if (role == "neck" || role == "head") {
    a.flex += 0.05 * p.amp * c;
  } else if (role == "shoulder") {
    a.flex += 0.06 * p.amp * s * side;
  } else if (role == "elbow") {
    a.flex += 0.05 * p.amp * (1.0 + c);
  } else if (role == "hip") {
    a.abduct -= 0.03 * p.amp * s;
  }
}

inline void add_walk(JointAngles& a, std::string_view role, int side, double t, const MotionParams& p) {
  const double w = 2 * std::numbers::pi * p.freq * t + p.phase;
  const double leg = std::sin(w) * side;  // legs in antiphase
  if (role == "hip") {
    a.flex += 0.42 * p.amp * leg;
  } else if (role == "knee") {
    a.flex -= 0.55 * p.amp * 0.5 * (1.0 - std::cos(w + (side > 0 ? 0.0 : std::numbers::pi) - 0.6));
  } else if (role == "ankle") {
    a.flex += 0.15 * p.amp * std::sin(w + 1.2) * side;
  } else if (role == "shoulder") {
    a.flex -= 0.35 * p.amp * leg;
  } else if (role == "elbow") {
    a.flex += 0.25 * p.amp + 0.12 * p.amp * std::sin(w) * side;
  } else if (starts_with(role, "spine")) {
    a.twist += 0.05 * p.amp * std::sin(w);
  }
}

inline void add_wave(JointAngles& a, std::string_view role, int side, double t, const MotionParams& p) {
  if (side != p.wave_side) return;
  const double w = 2 * std::numbers::pi * p.freq * 1.6 * t + p.phase;
  const double raise = 0.5 * (1.0 - std::cos(std::min(t * 1.5, 1.0) * std::numbers::pi));
  if (role == "shoulder") {
    a.abduct -= side * 1.9 * p.amp * raise;
  } else if (role == "elbow") {
    a.flex += 0.4 * p.amp * raise + 0.45 * p.amp * raise * std::sin(w);
  } else if (role == "wrist") {
    a.abduct += 0.2 * p.amp * std::sin(w);
  }
}

inline double squat_depth(double t, const MotionParams& p) {
  return 0.5 * (1.0 - std::cos(2 * std::numbers::pi * p.freq * 0.6 * t + p.phase));
}

inline void add_squat(JointAngles& a, std::string_view role, double t, const MotionParams& p) {
  const double d = squat_depth(t, p) * p.amp;
  if (role == "hip") {
    a.flex += 1.1 * d;
  } else if (role == "knee") {
    a.flex -= 1.8 * d;
  } else if (role == "ankle") {
    a.flex += 0.7 * d;
  } else if (starts_with(role, "spine")) {
    a.flex += 0.15 * d;
  } else if (role == "shoulder") {
    a.flex += 0.6 * d;
  }
}

inline Quat angles_to_quat(const JointAngles& a) {
  return Quat(Eigen::AngleAxisd(a.twist, Vec3::UnitZ()) * Eigen::AngleAxisd(a.abduct, Vec3::UnitY()) *
              Eigen::AngleAxisd(a.flex, Vec3::UnitX()))
      .normalized();
}

}  // namespace detail

/// Procedural angular clip over `generic`'s topology; every bone keeps a
/// constant length because positions only come out of forward kinematics.
inline AngularClip generate_synthetic_clip(const SkeletonTemplate& generic, const SyntheticRequest& req) {
  if (!(req.duration > 0.0) || !(req.framerate > 0.0)) throw DataError("synthetic motion: duration and framerate must be positive");
  if (!(req.morphology.scale > 0.0) || req.morphology.bone_jitter < 0.0 || req.morphology.bone_jitter >= 1.0)
    throw DataError("synthetic motion: invalid morphology");
  const auto& topo = generic.topology;
  const int J = topo.joint_count();
  const int F = std::max(1, static_cast<int>(std::lround(req.duration * req.framerate)));

  Rng rng(derive_seed(req.seed, {0x5e9}));
  detail::MotionParams p;
  p.freq = rng.uniform(0.8, 1.15);
  p.phase = rng.uniform(0.0, 2 * std::numbers::pi);
  p.amp = rng.uniform(0.8, 1.2);
  p.speed = rng.uniform(0.9, 1.4);
  p.wave_side = rng.uniform() < 0.5 ? -1 : 1;
  p.sway_freq = rng.uniform(0.25, 0.5);
  p.sway_phase = rng.uniform(0.0, 2 * std::numbers::pi);

  // Per-role bone factors keep left and right sides matched.
  std::vector<double> factor(J, req.morphology.scale);
  if (req.morphology.bone_jitter > 0.0) {
    for (int j = 0; j < J; ++j) {
      int side = 0;
      const std::string_view role = detail::joint_role(topo.joint_names()[j], &side);
      std::uint64_t h = 1469598103934665603ULL;
      for (char c : role) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
      Rng role_rng(derive_seed(req.seed, {0xb0e, h}));
      factor[j] *= role_rng.uniform(1.0 - req.morphology.bone_jitter, 1.0 + req.morphology.bone_jitter);
    }
  }

  AngularClip clip;
  clip.topology = topo;
  clip.framerate = req.framerate;
  clip.offsets.resize(J, 3);
  for (int j = 0; j < J; ++j) {
    const int par = topo.parent(j);
    if (par < 0)
      clip.offsets.row(j) = generic.positions.row(j);
    else
      clip.offsets.row(j) = factor[j] * (generic.positions.row(j) - generic.positions.row(par));
  }
  // Lift the rest pose so the lowest joint touches the ground plane.
  {
    std::vector<Vec3> rest(J);
    for (int j : topo.traversal_order())
      rest[j] = clip.offsets.row(j).transpose() + (topo.parent(j) < 0 ? Vec3::Zero().eval() : rest[topo.parent(j)]);
    double min_z = 0.0;
    for (const auto& r : rest) min_z = std::min(min_z, r.z());
    clip.offsets(topo.root(), 2) -= min_z;
  }

  // Unrecognized joints get a small individual oscillation.
  std::vector<double> extra_amp(J), extra_freq(J), extra_phase(J);
  for (int j = 0; j < J; ++j) {
    extra_amp[j] = rng.uniform(0.01, 0.05);
    extra_freq[j] = rng.uniform(0.2, 0.8);
    extra_phase[j] = rng.uniform(0.0, 2 * std::numbers::pi);
  }

  const double leg_scale = req.morphology.scale;
  clip.rotations.assign(F, std::vector<Quat>(J, Quat::Identity()));
  clip.root_translation.assign(F, Vec3::Zero());
  const bool walk = req.kind == MotionKind::kWalkCycle || req.kind == MotionKind::kComposite;
  const bool wave = req.kind == MotionKind::kArmWave || req.kind == MotionKind::kComposite;
  const bool squat = req.kind == MotionKind::kSquat;
  for (int f = 0; f < F; ++f) {
    const double t = f / req.framerate;
    for (int j = 0; j < J; ++j) {
      int side = 0;
      const std::string_view role = detail::joint_role(topo.joint_names()[j], &side);
      detail::JointAngles a;
      detail::add_idle(a, role, side, t, p);
      if (walk) detail::add_walk(a, role, side, t, p);
      if (wave) detail::add_wave(a, role, side, t, p);
      if (squat) detail::add_squat(a, role, t, p);
      const bool known = role == "pelvis" || role == "hip" || role == "knee" || role == "ankle" || role == "shoulder" ||
                         role == "elbow" || role == "wrist" || detail::starts_with(role, "spine") || role == "neck" ||
                         role == "head";
      if (!known) a.flex += extra_amp[j] * std::sin(2 * std::numbers::pi * extra_freq[j] * t + extra_phase[j]);
      clip.rotations[f][j] = detail::angles_to_quat(a);
    }
    Vec3 root = Vec3::Zero();
    const double sway = std::sin(2 * std::numbers::pi * p.sway_freq * t + p.sway_phase);
    root.x() += 0.02 * leg_scale * sway;
    if (walk) {
      const double w = 2 * std::numbers::pi * p.freq * t + p.phase;
      root.y() += p.speed * leg_scale * t;
      root.z() += 0.02 * leg_scale * std::cos(2.0 * w);
      // Heading yaw oscillation at the pelvis.
      clip.rotations[f][topo.root()] =
          (Quat(Eigen::AngleAxisd(0.06 * p.amp * std::sin(w), Vec3::UnitZ())) * clip.rotations[f][topo.root()]).normalized();
    }
    if (squat) root.z() -= 0.35 * leg_scale * detail::squat_depth(t, p) * p.amp;
    clip.root_translation[f] = root;
  }
  return clip;
}

inline MotionSequence generate_synthetic(const SkeletonTemplate& generic, const SyntheticRequest& req) {
  return forward_kinematics(generate_synthetic_clip(generic, req));
}

}  // namespace humot
