#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "humot/nn/ops.hpp"
#include "humot/nn/parameters.hpp"

namespace humot {

enum class Activation { kNone, kElu, kRelu };

/// Frequency of sin/cos pair k in the temporal positional encoding.
inline double positional_rate(int pair, int channels, double base = 10000.0) {
  return std::pow(base, -2.0 * pair / static_cast<double>(channels));
}

/// Interleaved sinusoidal encoding, returned as (F x C): entry (f, 2k) is
/// sin(f * rate(k)) and (f, 2k+1) is cos(f * rate(k)).
template <typename T>
nn::Matrix<T> temporal_positional_encoding(int frames, int channels, double base = 10000.0) {
  if (frames < 1 || channels < 2 || channels % 2 != 0)
    throw ModelError("positional encoding needs F >= 1 and an even channel count");
  nn::Matrix<T> pe(frames, channels);
  for (int k = 0; k < channels / 2; ++k) {
    const double rate = positional_rate(k, channels, base);
    for (int f = 0; f < frames; ++f) {
      pe(f, 2 * k) = static_cast<T>(std::sin(f * rate));
      pe(f, 2 * k + 1) = static_cast<T>(std::cos(f * rate));
    }
  }
  return pe;
}

template <typename T>
nn::Var<T> activate(const nn::Var<T>& x, Activation act) {
  switch (act) {
    case Activation::kElu: return nn::elu(x);
    case Activation::kRelu: return nn::relu(x);
    case Activation::kNone: break;
  }
  return x;
}

/// Fully connected layer applied token-wise.
struct DenseLayer {
  int weight = -1;
  int bias = -1;
  Activation act = Activation::kNone;

  template <typename T>
  static DenseLayer create(nn::ParameterSet<T>& set, Rng& rng, const std::string& name, int in, int out, Activation act,
                           double bias_init = 0.0) {
    DenseLayer l;
    l.weight = set.add(name + ".weight", nn::variance_scaling<T>(rng, in, out, in));
    l.bias = set.add(name + ".bias", nn::Matrix<T>::Constant(1, out, static_cast<T>(bias_init)));
    l.act = act;
    return l;
  }

  template <typename T>
  nn::Var<T> operator()(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x) const {
    return activate(nn::linear(x, ctx(weight), ctx(bias)), act);
  }
};

/// 1-D convolution along frames, applied per token row group.
struct TemporalConvLayer {
  int weight = -1;
  int bias = -1;
  Activation act = Activation::kNone;

  template <typename T>
  static TemporalConvLayer create(nn::ParameterSet<T>& set, Rng& rng, const std::string& name, int in, int out,
                                  int kernel, Activation act) {
    TemporalConvLayer l;
    l.weight = set.add(name + ".weight", nn::variance_scaling<T>(rng, kernel * in, out, kernel * in));
    l.bias = set.add(name + ".bias", nn::Matrix<T>::Zero(1, out));
    l.act = act;
    return l;
  }

  template <typename T>
  nn::Var<T> operator()(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x, int frames) const {
    return activate(nn::temporal_conv(x, ctx(weight), ctx(bias), frames), act);
  }
};

struct LayerNormLayer {
  int gamma = -1;
  int beta = -1;

  template <typename T>
  static LayerNormLayer create(nn::ParameterSet<T>& set, const std::string& name, int width) {
    return {set.add(name + ".gamma", nn::Matrix<T>::Ones(1, width)), set.add(name + ".beta", nn::Matrix<T>::Zero(1, width))};
  }

  template <typename T>
  nn::Var<T> operator()(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x, double eps) const {
    return nn::layer_norm(x, ctx(gamma), ctx(beta), static_cast<T>(eps));
  }
};

/// Cross-covariance transformer block: three pre-normalized residual
/// sublayers (channel attention, local patch interaction, feed-forward).
struct XcaBlock {
  int heads = 1;
  double eps = 1e-6;
  LayerNormLayer norm_attn, norm_local, norm_ffn;
  DenseLayer qkv, proj;
  int temperature = -1;
  int dw_weight = -1, dw_bias = -1;  // depthwise 3x3 over (joint, frame)
  DenseLayer pointwise;              // 1x1 convolution
  DenseLayer ffn_in, ffn_out;

  template <typename T>
  static XcaBlock create(nn::ParameterSet<T>& set, Rng& rng, const std::string& name, int channels, int heads,
                         int ffn_expansion, double eps) {
    XcaBlock b;
    b.heads = heads;
    b.eps = eps;
    b.norm_attn = LayerNormLayer::create(set, name + ".norm_attn", channels);
    b.qkv = DenseLayer::create(set, rng, name + ".qkv", channels, 3 * channels, Activation::kNone);
    b.temperature = set.add(name + ".temperature", nn::Matrix<T>::Ones(heads, 1));
    b.proj = DenseLayer::create(set, rng, name + ".proj", channels, channels, Activation::kNone);
    b.norm_local = LayerNormLayer::create(set, name + ".norm_local", channels);
    b.dw_weight = set.add(name + ".local_dw.weight", nn::variance_scaling<T>(rng, 9, channels, 9));
    b.dw_bias = set.add(name + ".local_dw.bias", nn::Matrix<T>::Zero(1, channels));
    b.pointwise = DenseLayer::create(set, rng, name + ".local_pw", channels, channels, Activation::kNone);
    b.norm_ffn = LayerNormLayer::create(set, name + ".norm_ffn", channels);
    b.ffn_in = DenseLayer::create(set, rng, name + ".ffn_in", channels, ffn_expansion * channels, Activation::kNone);
    b.ffn_out = DenseLayer::create(set, rng, name + ".ffn_out", ffn_expansion * channels, channels, Activation::kNone);
    return b;
  }

  /// Channel-attention sublayer alone (normalization, qkv, attention,
  /// projection), without the residual.
  template <typename T>
  nn::Var<T> attention(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x) const {
    auto h = norm_attn(ctx, x, eps);
    h = nn::cross_covariance_attention(qkv(ctx, h), ctx(temperature), heads);
    return proj(ctx, h);
  }

  template <typename T>
  nn::Var<T> local_interaction(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x, int grid_rows, int frames) const {
    auto h = norm_local(ctx, x, eps);
    h = nn::gelu(nn::depthwise_conv2d(h, ctx(dw_weight), ctx(dw_bias), grid_rows, frames));
    return pointwise(ctx, h);
  }

  template <typename T>
  nn::Var<T> feed_forward(const nn::ForwardContext<T>& ctx, const nn::Var<T>& x) const {
    auto h = norm_ffn(ctx, x, eps);
    return ffn_out(ctx, nn::gelu(ffn_in(ctx, h)));
  }

  /// `x` holds grid_rows * frames tokens.
  template <typename T>
  nn::Var<T> operator()(const nn::ForwardContext<T>& ctx, nn::Var<T> x, int grid_rows, int frames) const {
    if (x.rows() != static_cast<Eigen::Index>(grid_rows) * frames)
      throw ModelError("xca block: token count " + std::to_string(x.rows()) + " does not match the " +
                       std::to_string(grid_rows) + " x " + std::to_string(frames) + " grid");
    x = nn::add(x, attention(ctx, x));
    x = nn::add(x, local_interaction(ctx, x, grid_rows, frames));
    x = nn::add(x, feed_forward(ctx, x));
    return x;
  }
};

}  // namespace humot
