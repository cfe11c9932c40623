#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "humot/nn/parameters.hpp"
#include "humot/training/config.hpp"

namespace humot {

/// First and second moment estimates, one pair per parameter tensor.
template <typename T>
struct AdamState {
  std::vector<nn::Matrix<T>> m;
  std::vector<nn::Matrix<T>> v;
  std::int64_t updates = 0;

  static AdamState zeros(const nn::ParameterSet<T>& params) {
    AdamState s;
    for (int i = 0; i < params.size(); ++i) {
      s.m.push_back(nn::Matrix<T>::Zero(params[i].value.rows(), params[i].value.cols()));
      s.v.push_back(nn::Matrix<T>::Zero(params[i].value.rows(), params[i].value.cols()));
    }
    return s;
  }
};

/// One bias-corrected Adam update using the gradients held in `params`.
template <typename T>
void adam_update(nn::ParameterSet<T>& params, AdamState<T>& state, double lr, const TrainConfig& c) {
  if (static_cast<int>(state.m.size()) != params.size()) state = AdamState<T>::zeros(params);
  ++state.updates;
  const double t = static_cast<double>(state.updates);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T step = static_cast<T>(lr / (1.0 - std::pow(c.beta1, t)));
  const T vcorr = static_cast<T>(1.0 / std::sqrt(1.0 - std::pow(c.beta2, t)));
  const T eps = static_cast<T>(c.adam_eps);
  for (int i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.size() != p.value.size()) p.zero_grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = b1 * m + (T(1) - b1) * p.grad;
    v = b2 * v + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= step * m.array() / (v.array().sqrt() * vcorr + eps);
  }
}

}  // namespace humot
