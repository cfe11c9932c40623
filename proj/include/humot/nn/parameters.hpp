#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "humot/nn/tensor.hpp"
#include "humot/rng.hpp"

namespace humot::nn {

/// Named learnable tensors in registration order. Layers refer to entries by
/// index, so copies of a set stay self-consistent.
template <typename T>
class ParameterSet {
 public:
  int add(const std::string& name, Matrix<T> value) {
    if (index_.count(name)) throw ModelError("duplicate parameter name '" + name + "'");
    const int id = static_cast<int>(params_.size());
    params_.push_back(Parameter<T>{std::move(value), Matrix<T>()});
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }

  int size() const { return static_cast<int>(params_.size()); }
  Parameter<T>& operator[](int id) { return params_[id]; }
  const Parameter<T>& operator[](int id) const { return params_[id]; }
  const std::string& name(int id) const { return names_[id]; }
  const std::vector<std::string>& names() const { return names_; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  /// Total number of learnable scalars.
  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (int i = 0; i < size(); ++i) out.add(names_[i], params_[i].value.template cast<U>());
    return out;
  }

 private:
  std::deque<Parameter<T>> params_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

/// Parameter access for one forward pass: differentiable leaves when a tape
/// and a mutable set are supplied, read-only views otherwise.
template <typename T>
class ForwardContext {
 public:
  /// Inference.
  explicit ForwardContext(const ParameterSet<T>& params) : const_params_(&params) {}
  /// Training: parameters become tape leaves.
  ForwardContext(ParameterSet<T>& params, Tape<T>& tape) : params_(&params), const_params_(&params), tape_(&tape) {}

  Var<T> operator()(int id) const {
    if (tape_ && params_) return tape_->parameter((*params_)[id]);
    return Var<T>::view((*const_params_)[id]);
  }

  /// Input data; never differentiated.
  Var<T> input(Matrix<T> value) const { return Var<T>::constant(std::move(value)); }

  Tape<T>* tape() const { return tape_; }

 private:
  ParameterSet<T>* params_ = nullptr;
  const ParameterSet<T>* const_params_ = nullptr;
  Tape<T>* tape_ = nullptr;
};

/// Uniform initializer with variance 1 / fan_in.
template <typename T>
Matrix<T> variance_scaling(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  return m;
}

}  // namespace humot::nn
