#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "humot/nn/tensor.hpp"

namespace humot::nn {

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ModelError(std::string("shape error: ") + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dense algebra

/// y = x W + b, with W stored (in x out) and b (1 x out).
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  detail::require(x.cols() == w.rows(), "linear: input width differs from weight rows");
  detail::require(b.rows() == 1 && b.cols() == w.cols(), "linear: bias shape");
  Matrix<T> y(x.rows(), w.cols());
  y.noalias() = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  auto out = Var<T>::result(std::move(y), x, w, b);
  out.set_backward([xn = x.node(), wn = w.node(), bn = b.node()](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    if (xn->requires_grad) xn->accumulate((g * wn->val().transpose()).eval());
    if (wn->requires_grad) wn->accumulate((xn->val().transpose() * g).eval());
    if (bn->requires_grad) bn->accumulate(g.colwise().sum().eval());
  });
  return out;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add: operand shapes differ");
  auto out = Var<T>::result((a.value() + b.value()).eval(), a, b);
  out.set_backward([an = a.node(), bn = b.node()](Node<T>& self) {
    an->accumulate(self.grad);
    bn->accumulate(self.grad);
  });
  return out;
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  auto out = Var<T>::result((a.value() * factor).eval(), a);
  out.set_backward([an = a.node(), factor](Node<T>& self) { an->accumulate((self.grad * factor).eval()); });
  return out;
}

// ---------------------------------------------------------------------------
// Activations

template <typename T>
Var<T> elu(const Var<T>& x) {
  const auto xa = x.value().array();
  Matrix<T> y = (xa > T(0)).select(xa, xa.exp() - T(1)).matrix();
  auto out = Var<T>::result(std::move(y), x);
  out.set_backward([xn = x.node()](Node<T>& self) {
    const auto xa = xn->val().array();
    const auto ya = self.value.array();
    xn->accumulate((self.grad.array() * (xa > T(0)).select(Matrix<T>::Ones(xa.rows(), xa.cols()).array(), ya + T(1)))
                       .matrix()
                       .eval());
  });
  return out;
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Matrix<T> y = x.value().cwiseMax(T(0));
  auto out = Var<T>::result(std::move(y), x);
  out.set_backward([xn = x.node()](Node<T>& self) {
    xn->accumulate((xn->val().array() > T(0)).select(self.grad.array(), T(0)).matrix().eval());
  });
  return out;
}

/// GELU, tanh form.
template <typename T>
Var<T> gelu(const Var<T>& x) {
  static constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  static constexpr T kA = T(0.044715);
  const auto xa = x.value().array();
  Matrix<T> t = (kC * (xa + kA * xa.cube())).tanh().matrix();
  Matrix<T> y = (T(0.5) * xa * (T(1) + t.array())).matrix();
  auto out = Var<T>::result(std::move(y), x);
  out.set_backward([xn = x.node(), t = std::move(t)](Node<T>& self) {
    const auto xa = xn->val().array();
    const auto ta = t.array();
    const auto d = T(0.5) * (T(1) + ta) + T(0.5) * xa * (T(1) - ta.square()) * kC * (T(1) + T(3) * kA * xa.square());
    xn->accumulate((self.grad.array() * d).matrix().eval());
  });
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

/// Row-wise layer normalization with affine parameters (1 x C each).
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-6)) {
  detail::require(gamma.cols() == x.cols() && beta.cols() == x.cols(), "layer_norm: affine width");
  const Eigen::Index n = x.rows();
  const Eigen::Index c = x.cols();
  const Matrix<T>& xv = x.value();
  Eigen::Matrix<T, Eigen::Dynamic, 1> mean = xv.rowwise().mean();
  Matrix<T> xhat = xv.colwise() - mean;
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd =
      ((xhat.array().square().rowwise().sum() / T(c)) + eps).rsqrt().matrix();
  xhat = rstd.asDiagonal() * xhat;
  Matrix<T> y = xhat.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  auto out = Var<T>::result(std::move(y), x, gamma, beta);
  out.set_backward([xn = x.node(), gn = gamma.node(), bn = beta.node(), xhat = std::move(xhat), rstd = std::move(rstd), n,
                    c](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    if (gn->requires_grad) gn->accumulate((g.array() * xhat.array()).colwise().sum().matrix().eval());
    if (bn->requires_grad) bn->accumulate(g.colwise().sum().eval());
    if (xn->requires_grad) {
      Matrix<T> dxhat = g.array().rowwise() * gn->val().row(0).array();
      Eigen::Matrix<T, Eigen::Dynamic, 1> m1 = dxhat.rowwise().mean();
      Eigen::Matrix<T, Eigen::Dynamic, 1> m2 = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / T(c);
      Matrix<T> dx = dxhat.colwise() - m1;
      dx -= (xhat.array().colwise() * m2.array()).matrix();
      xn->accumulate((rstd.asDiagonal() * dx).eval());
    }
    (void)n;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Token layout helpers. A token set over an R x F grid (R joints, F frames)
// is stored as R*F rows, row r*F + f.

/// Column concatenation [a | b].
template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
  detail::require(a.rows() == b.rows(), "concat_cols: row counts differ");
  Matrix<T> y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  auto out = Var<T>::result(std::move(y), a, b);
  out.set_backward([an = a.node(), bn = b.node(), ca = a.cols(), cb = b.cols()](Node<T>& self) {
    if (an->requires_grad) an->accumulate(self.grad.leftCols(ca).eval());
    if (bn->requires_grad) bn->accumulate(self.grad.rightCols(cb).eval());
  });
  return out;
}

/// Row concatenation [a ; b].
template <typename T>
Var<T> append_rows(const Var<T>& a, const Var<T>& b) {
  detail::require(a.cols() == b.cols(), "append_rows: column counts differ");
  Matrix<T> y(a.rows() + b.rows(), a.cols());
  y.topRows(a.rows()) = a.value();
  y.bottomRows(b.rows()) = b.value();
  auto out = Var<T>::result(std::move(y), a, b);
  out.set_backward([an = a.node(), bn = b.node(), ra = a.rows(), rb = b.rows()](Node<T>& self) {
    if (an->requires_grad) an->accumulate(self.grad.topRows(ra).eval());
    if (bn->requires_grad) bn->accumulate(self.grad.bottomRows(rb).eval());
  });
  return out;
}

template <typename T>
Var<T> slice_rows(const Var<T>& x, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows: range");
  auto out = Var<T>::result(x.value().middleRows(start, count).eval(), x);
  out.set_backward([xn = x.node(), start, count, rows = x.rows(), cols = x.cols()](Node<T>& self) {
    Matrix<T> g = Matrix<T>::Zero(rows, cols);
    g.middleRows(start, count) = self.grad;
    xn->accumulate(g);
  });
  return out;
}

/// Each row repeated `times` times consecutively: (R x C) -> (R*times x C).
template <typename T>
Var<T> repeat_rows(const Var<T>& x, Eigen::Index times) {
  const Eigen::Index r = x.rows();
  Matrix<T> y(r * times, x.cols());
  for (Eigen::Index i = 0; i < r; ++i) y.middleRows(i * times, times).rowwise() = x.value().row(i);
  auto out = Var<T>::result(std::move(y), x);
  out.set_backward([xn = x.node(), r, times](Node<T>& self) {
    Matrix<T> g(r, self.grad.cols());
    for (Eigen::Index i = 0; i < r; ++i) g.row(i) = self.grad.middleRows(i * times, times).colwise().sum();
    xn->accumulate(g);
  });
  return out;
}

/// x (R*F x C) + p (F x C) broadcast over the R segments.
template <typename T>
Var<T> add_tiled(const Var<T>& x, const Var<T>& p) {
  const Eigen::Index f = p.rows();
  detail::require(p.cols() == x.cols() && f > 0 && x.rows() % f == 0, "add_tiled: shapes");
  const Eigen::Index segments = x.rows() / f;
  Matrix<T> y = x.value();
  for (Eigen::Index s = 0; s < segments; ++s) y.middleRows(s * f, f) += p.value();
  auto out = Var<T>::result(std::move(y), x, p);
  out.set_backward([xn = x.node(), pn = p.node(), f, segments](Node<T>& self) {
    xn->accumulate(self.grad);
    if (pn->requires_grad) {
      Matrix<T> g = Matrix<T>::Zero(f, self.grad.cols());
      for (Eigen::Index s = 0; s < segments; ++s) g += self.grad.middleRows(s * f, f);
      pn->accumulate(g);
    }
  });
  return out;
}

/// x (R*F x C) * s (F x C) element-wise, broadcast over the R segments.
template <typename T>
Var<T> mul_tiled(const Var<T>& x, const Var<T>& s) {
  const Eigen::Index f = s.rows();
  detail::require(s.cols() == x.cols() && f > 0 && x.rows() % f == 0, "mul_tiled: shapes");
  const Eigen::Index segments = x.rows() / f;
  Matrix<T> y(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < segments; ++k)
    y.middleRows(k * f, f) = x.value().middleRows(k * f, f).cwiseProduct(s.value());
  auto out = Var<T>::result(std::move(y), x, s);
  out.set_backward([xn = x.node(), sn = s.node(), f, segments](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    if (xn->requires_grad) {
      Matrix<T> gx(g.rows(), g.cols());
      for (Eigen::Index k = 0; k < segments; ++k) gx.middleRows(k * f, f) = g.middleRows(k * f, f).cwiseProduct(sn->val());
      xn->accumulate(gx);
    }
    if (sn->requires_grad) {
      Matrix<T> gs = Matrix<T>::Zero(f, g.cols());
      for (Eigen::Index k = 0; k < segments; ++k) gs += g.middleRows(k * f, f).cwiseProduct(xn->val().middleRows(k * f, f));
      sn->accumulate(gs);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Convolutions

/// 1-D convolution along frames, applied independently to each of the
/// x.rows()/frames segments, zero "same" padding. Weight is (K*Cin x Cout)
/// with tap k occupying rows [k*Cin, (k+1)*Cin).
template <typename T>
Var<T> temporal_conv(const Var<T>& x, const Var<T>& w, const Var<T>& b, Eigen::Index frames) {
  const Eigen::Index cin = x.cols();
  detail::require(frames > 0 && x.rows() % frames == 0, "temporal_conv: rows not a multiple of frames");
  detail::require(w.rows() % cin == 0, "temporal_conv: weight rows not a multiple of input width");
  const Eigen::Index k = w.rows() / cin;
  detail::require(k % 2 == 1, "temporal_conv: kernel size must be odd");
  const Eigen::Index pad = k / 2;
  const Eigen::Index n = x.rows();
  const Eigen::Index segments = n / frames;
  Matrix<T> col = Matrix<T>::Zero(n, k * cin);
  for (Eigen::Index s = 0; s < segments; ++s)
    for (Eigen::Index f = 0; f < frames; ++f)
      for (Eigen::Index t = 0; t < k; ++t) {
        const Eigen::Index src = f + t - pad;
        if (src < 0 || src >= frames) continue;
        col.row(s * frames + f).segment(t * cin, cin) = x.value().row(s * frames + src);
      }
  Matrix<T> y(n, w.cols());
  y.noalias() = col * w.value();
  y.rowwise() += b.value().row(0);
  auto out = Var<T>::result(std::move(y), x, w, b);
  out.set_backward([xn = x.node(), wn = w.node(), bn = b.node(), col = std::move(col), frames, segments, k, pad,
                    cin](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    if (wn->requires_grad) wn->accumulate((col.transpose() * g).eval());
    if (bn->requires_grad) bn->accumulate(g.colwise().sum().eval());
    if (xn->requires_grad) {
      Matrix<T> dcol(g.rows(), k * cin);
      dcol.noalias() = g * wn->val().transpose();
      Matrix<T> dx = Matrix<T>::Zero(g.rows(), cin);
      for (Eigen::Index s = 0; s < segments; ++s)
        for (Eigen::Index f = 0; f < frames; ++f)
          for (Eigen::Index t = 0; t < k; ++t) {
            const Eigen::Index src = f + t - pad;
            if (src < 0 || src >= frames) continue;
            dx.row(s * frames + src) += dcol.row(s * frames + f).segment(t * cin, cin);
          }
      xn->accumulate(dx);
    }
  });
  return out;
}

/// Depthwise 3x3 convolution over the (rows x frames) token grid, zero
/// padding. Weight is (9 x C), tap (dr, df) at row (dr+1)*3 + (df+1).
template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, Eigen::Index grid_rows, Eigen::Index frames) {
  const Eigen::Index c = x.cols();
  detail::require(x.rows() == grid_rows * frames, "depthwise_conv2d: token count does not match the declared grid");
  detail::require(w.rows() == 9 && w.cols() == c && b.cols() == c, "depthwise_conv2d: weight shape");
  Matrix<T> y(x.rows(), c);
  y.rowwise() = b.value().row(0);
  const Matrix<T>& xv = x.value();
  const Matrix<T>& wv = w.value();
  for (Eigen::Index r = 0; r < grid_rows; ++r)
    for (Eigen::Index f = 0; f < frames; ++f) {
      auto yr = y.row(r * frames + f);
      for (int dr = -1; dr <= 1; ++dr) {
        const Eigen::Index rr = r + dr;
        if (rr < 0 || rr >= grid_rows) continue;
        for (int df = -1; df <= 1; ++df) {
          const Eigen::Index ff = f + df;
          if (ff < 0 || ff >= frames) continue;
          yr.array() += wv.row((dr + 1) * 3 + (df + 1)).array() * xv.row(rr * frames + ff).array();
        }
      }
    }
  auto out = Var<T>::result(std::move(y), x, w, b);
  out.set_backward([xn = x.node(), wn = w.node(), bn = b.node(), grid_rows, frames, c](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    const Matrix<T>& xv = xn->val();
    const Matrix<T>& wv = wn->val();
    if (bn->requires_grad) bn->accumulate(g.colwise().sum().eval());
    Matrix<T> dx;
    if (xn->requires_grad) dx = Matrix<T>::Zero(g.rows(), c);
    Matrix<T> dw = Matrix<T>::Zero(9, c);
    for (Eigen::Index r = 0; r < grid_rows; ++r)
      for (Eigen::Index f = 0; f < frames; ++f) {
        const auto gr = g.row(r * frames + f).array();
        for (int dr = -1; dr <= 1; ++dr) {
          const Eigen::Index rr = r + dr;
          if (rr < 0 || rr >= grid_rows) continue;
          for (int df = -1; df <= 1; ++df) {
            const Eigen::Index ff = f + df;
            if (ff < 0 || ff >= frames) continue;
            const int tap = (dr + 1) * 3 + (df + 1);
            dw.row(tap).array() += gr * xv.row(rr * frames + ff).array();
            if (xn->requires_grad) dx.row(rr * frames + ff).array() += gr * wv.row(tap).array();
          }
        }
      }
    if (wn->requires_grad) wn->accumulate(dw);
    if (xn->requires_grad) xn->accumulate(dx);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Cross-covariance attention

/// Attention over feature channels. `qkv` is (N x 3C) laid out [q | k | v],
/// each split into `heads` contiguous groups of d = C/heads channels. Per
/// head, queries and keys are L2-normalized along the token axis, the d x d
/// attention is softmax(tau * q^T k) row-wise and the output is v A^T.
/// Cost is linear in N.
template <typename T>
Var<T> cross_covariance_attention(const Var<T>& qkv, const Var<T>& temperature, int heads) {
  const Eigen::Index n = qkv.rows();
  detail::require(qkv.cols() % 3 == 0, "xca: qkv width must be 3C");
  const Eigen::Index c = qkv.cols() / 3;
  detail::require(heads > 0 && c % heads == 0, "xca: channels not divisible by heads");
  detail::require(temperature.rows() == heads && temperature.cols() == 1, "xca: temperature must be (heads x 1)");
  const Eigen::Index d = c / heads;
  constexpr T kEps = T(1e-12);

  struct HeadCache {
    Matrix<T> qn, kn;  // normalized (N x d)
    Eigen::Matrix<T, 1, Eigen::Dynamic> qnorm, knorm;
    Matrix<T> m;       // qn^T kn
    Matrix<T> attn;    // softmax(tau m)
  };
  auto caches = std::make_shared<std::vector<HeadCache>>(heads);
  const Matrix<T>& x = qkv.value();
  Matrix<T> y(n, c);
  for (int h = 0; h < heads; ++h) {
    HeadCache& hc = (*caches)[h];
    const auto q = x.middleCols(h * d, d);
    const auto k = x.middleCols(c + h * d, d);
    const auto v = x.middleCols(2 * c + h * d, d);
    hc.qnorm = q.colwise().norm().cwiseMax(kEps);
    hc.knorm = k.colwise().norm().cwiseMax(kEps);
    hc.qn = q * hc.qnorm.cwiseInverse().asDiagonal();
    hc.kn = k * hc.knorm.cwiseInverse().asDiagonal();
    hc.m.noalias() = hc.qn.transpose() * hc.kn;
    Matrix<T> s = hc.m * temperature.value()(h, 0);
    s.colwise() -= s.rowwise().maxCoeff();
    s = s.array().exp().matrix();
    s = s.array().colwise() / s.array().rowwise().sum();
    hc.attn = std::move(s);
    y.middleCols(h * d, d).noalias() = v * hc.attn.transpose();
  }
  auto out = Var<T>::result(std::move(y), qkv, temperature);
  out.set_backward([xn = qkv.node(), tn = temperature.node(), caches, heads, n, c, d](Node<T>& self) {
    const Matrix<T>& g = self.grad;
    const Matrix<T>& x = xn->val();
    Matrix<T> dx;
    if (xn->requires_grad) dx.resize(n, 3 * c);
    Matrix<T> dtau = Matrix<T>::Zero(heads, 1);
    for (int h = 0; h < heads; ++h) {
      const HeadCache& hc = (*caches)[h];
      const T tau = tn->val()(h, 0);
      const auto go = g.middleCols(h * d, d);
      const auto v = x.middleCols(2 * c + h * d, d);
      Matrix<T> da = go.transpose() * v;  // d x d
      Matrix<T> ds = hc.attn.array() *
                     (da.array().colwise() - (da.array() * hc.attn.array()).rowwise().sum());
      dtau(h, 0) = (ds.array() * hc.m.array()).sum();
      if (!xn->requires_grad) continue;
      dx.middleCols(2 * c + h * d, d).noalias() = go * hc.attn;
      const Matrix<T> dm = ds * tau;
      Matrix<T> dqn = hc.kn * dm.transpose();
      Matrix<T> dkn = hc.qn * dm;
      // Back through column normalization: (g - xhat (xhat . g)) / ||x||.
      const Eigen::Matrix<T, 1, Eigen::Dynamic> qdot = (hc.qn.array() * dqn.array()).colwise().sum();
      const Eigen::Matrix<T, 1, Eigen::Dynamic> kdot = (hc.kn.array() * dkn.array()).colwise().sum();
      dx.middleCols(h * d, d) = (dqn - hc.qn * qdot.asDiagonal()) * hc.qnorm.cwiseInverse().asDiagonal();
      dx.middleCols(c + h * d, d) = (dkn - hc.kn * kdot.asDiagonal()) * hc.knorm.cwiseInverse().asDiagonal();
    }
    if (tn->requires_grad) tn->accumulate(dtau);
    if (xn->requires_grad) xn->accumulate(dx);
  });
  return out;
}

}  // namespace humot::nn
