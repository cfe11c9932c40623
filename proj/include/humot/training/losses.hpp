#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "humot/nn/tensor.hpp"
#include "humot/skeleton.hpp"

namespace humot {

namespace detail {

inline void require_same_shape(const MotionSequence& a, const MotionSequence& b, const char* what) {
  if (a.joint_count() != b.joint_count() || a.frame_count() != b.frame_count())
    throw DataError(std::string(what) + ": shapes differ (" + std::to_string(a.joint_count()) + "x" +
                    std::to_string(a.frame_count()) + " vs " + std::to_string(b.joint_count()) + "x" +
                    std::to_string(b.frame_count()) + ")");
}

}  // namespace detail

/// Mean over joints and frames of the squared position error.
inline double loss_rec(const MotionSequence& pred, const MotionSequence& target) {
  detail::require_same_shape(pred, target, "loss_rec");
  double sum = 0.0;
  const auto p = pred.data();
  const auto t = target.data();
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] - t[i]) * (p[i] - t[i]);
  return sum / (static_cast<double>(pred.joint_count()) * pred.frame_count());
}

/// Mean over bones of the population variance (over frames) of the
/// predicted-to-target bone length ratio.
inline double loss_blc(const MotionSequence& pred, const MotionSequence& target) {
  detail::require_same_shape(pred, target, "loss_blc");
  if (!pred.topology().same_structure(target.topology())) throw DataError("loss_blc: topologies differ");
  const Eigen::MatrixXd lp = bone_lengths(pred);
  const Eigen::MatrixXd lt = bone_lengths(target);
  if (lt.rows() == 0) return 0.0;
  if ((lt.array() <= 0.0).any()) throw NumericError("loss_blc: zero-length target bone");
  const Eigen::ArrayXXd ratio = lp.array() / lt.array();
  const Eigen::ArrayXd mean = ratio.rowwise().mean();
  const Eigen::ArrayXd var = (ratio.colwise() - mean).square().rowwise().mean();
  return var.mean();
}

namespace nn {

/// Differentiable reconstruction loss over (J*F x 3) token rows.
template <typename T>
Var<T> reconstruction_loss(const Var<T>& pred, const Matrix<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ModelError("reconstruction_loss: prediction and target shapes differ");
  Matrix<T> diff = pred.value() - target;
  const T n = static_cast<T>(pred.rows());
  Matrix<T> value(1, 1);
  value(0, 0) = diff.squaredNorm() / n;
  auto out = Var<T>::result(std::move(value), pred);
  out.set_backward([pn = pred.node(), diff = std::move(diff), n](Node<T>& self) {
    pn->accumulate((diff * (T(2) * self.grad(0, 0) / n)).eval());
  });
  return out;
}

/// Differentiable bone-length consistency loss. `parents[j]` indexes the
/// parent joint of j (-1 for the root); rows are laid out j*F + f.
template <typename T>
Var<T> bone_consistency_loss(const Var<T>& pred, const Matrix<T>& target, const std::vector<int>& parents, int frames) {
  const int J = static_cast<int>(parents.size());
  if (pred.rows() != static_cast<Eigen::Index>(J) * frames || target.rows() != pred.rows() || pred.cols() != 3)
    throw ModelError("bone_consistency_loss: shapes do not match J x F");
  std::vector<int> bones;
  for (int j = 0; j < J; ++j)
    if (parents[j] >= 0) bones.push_back(j);
  Matrix<T> value = Matrix<T>::Zero(1, 1);
  if (bones.empty()) return Var<T>::constant(std::move(value));

  const Matrix<T>& p = pred.value();
  const int B = static_cast<int>(bones.size());
  // Per bone and frame: ratio, unit predicted direction and target length.
  Matrix<T> ratio(B, frames), target_len(B, frames);
  Matrix<T> dir(static_cast<Eigen::Index>(B) * frames, 3);
  T total = 0;
  for (int b = 0; b < B; ++b) {
    const int j = bones[b];
    const int q = parents[j];
    for (int f = 0; f < frames; ++f) {
      const Eigen::Matrix<T, 1, 3> dp = p.row(j * frames + f) - p.row(q * frames + f);
      const T lt = (target.row(j * frames + f) - target.row(q * frames + f)).norm();
      if (!(lt > T(0))) throw NumericError("bone_consistency_loss: zero-length target bone");
      const T lp = dp.norm();
      ratio(b, f) = lp / lt;
      target_len(b, f) = lt;
      if (lp > T(0))
        dir.row(b * frames + f) = dp / lp;
      else
        dir.row(b * frames + f).setZero();
    }
    const T mean = ratio.row(b).mean();
    total += (ratio.row(b).array() - mean).square().mean();
  }
  value(0, 0) = total / static_cast<T>(B);
  auto out = Var<T>::result(std::move(value), pred);
  out.set_backward([pn = pred.node(), bones = std::move(bones), parents, frames, ratio = std::move(ratio),
                    target_len = std::move(target_len), dir = std::move(dir)](Node<T>& self) {
    const int B = static_cast<int>(bones.size());
    const T g = self.grad(0, 0) / static_cast<T>(B);
    Matrix<T> gp = Matrix<T>::Zero(static_cast<Eigen::Index>(parents.size()) * frames, 3);
    for (int b = 0; b < B; ++b) {
      const int j = bones[b];
      const int q = parents[j];
      const T mean = ratio.row(b).mean();
      for (int f = 0; f < frames; ++f) {
        const T d_ratio = g * T(2) * (ratio(b, f) - mean) / static_cast<T>(frames);
        const auto d = (dir.row(b * frames + f) * (d_ratio / target_len(b, f))).eval();
        gp.row(j * frames + f) += d;
        gp.row(q * frames + f) -= d;
      }
    }
    pn->accumulate(gp);
  });
  return out;
}

}  // namespace nn
}  // namespace humot
