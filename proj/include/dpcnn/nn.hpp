// Minimal CNN engine with exact reverse-mode gradients.
//
// Layer set: 5x5 same-padding convolution (cross-correlation semantics),
// ReLU, 2x2 max pooling, dense, inverted dropout, softmax cross-entropy.
// Activations are stored channel-major [C][B][H][W] so a whole minibatch
// convolution is one GEMM over an im2col buffer.
#pragma once

#include <Eigen/Dense>

#include <cstring>
#include <limits>
#include <vector>

#include "dpcnn/rng.hpp"
#include "dpcnn/tensor.hpp"

namespace dpcnn::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<Mat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

inline constexpr int kConvK = 5;      // fixed 5x5 kernels
inline constexpr int kConvPad = 2;    // same padding

// ---------------------------------------------------------------------------
// im2col for channel-major activations.
// cols has C*25 rows and B*H*W columns; row (c, ky, kx) holds the input
// shifted by (ky-2, kx-2) with zero fill outside each example's H x W tile.
template <class T>
void im2col(const T* in, int C, int B, int H, int W, std::vector<T>& cols) {
  const size_t tile = static_cast<size_t>(H) * W;
  const size_t ncols = static_cast<size_t>(B) * tile;
  cols.assign(static_cast<size_t>(C) * kConvK * kConvK * ncols, T(0));
  for (int c = 0; c < C; ++c) {
    const T* src_c = in + static_cast<size_t>(c) * ncols;
    for (int ky = 0; ky < kConvK; ++ky) {
      const int dy = ky - kConvPad;
      for (int kx = 0; kx < kConvK; ++kx) {
        const int dx = kx - kConvPad;
        T* dst_row = cols.data() +
                     (static_cast<size_t>(c) * kConvK * kConvK + ky * kConvK + kx) * ncols;
        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
        if (x1 <= x0) continue;
        for (int b = 0; b < B; ++b) {
          const T* src_b = src_c + static_cast<size_t>(b) * tile;
          T* dst_b = dst_row + static_cast<size_t>(b) * tile;
          for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
            std::memcpy(dst_b + static_cast<size_t>(y) * W + x0,
                        src_b + static_cast<size_t>(y + dy) * W + (x0 + dx),
                        static_cast<size_t>(x1 - x0) * sizeof(T));
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-adds column gradients back onto the input.
template <class T>
void col2im(const std::vector<T>& cols, int C, int B, int H, int W, T* din) {
  const size_t tile = static_cast<size_t>(H) * W;
  const size_t ncols = static_cast<size_t>(B) * tile;
  std::fill(din, din + static_cast<size_t>(C) * ncols, T(0));
  for (int c = 0; c < C; ++c) {
    T* dst_c = din + static_cast<size_t>(c) * ncols;
    for (int ky = 0; ky < kConvK; ++ky) {
      const int dy = ky - kConvPad;
      for (int kx = 0; kx < kConvK; ++kx) {
        const int dx = kx - kConvPad;
        const T* src_row = cols.data() +
                           (static_cast<size_t>(c) * kConvK * kConvK + ky * kConvK + kx) * ncols;
        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
        if (x1 <= x0) continue;
        for (int b = 0; b < B; ++b) {
          T* dst_b = dst_c + static_cast<size_t>(b) * tile;
          const T* src_b = src_row + static_cast<size_t>(b) * tile;
          for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
            T* d = dst_b + static_cast<size_t>(y + dy) * W + (x0 + dx);
            const T* s = src_b + static_cast<size_t>(y) * W + x0;
            for (int x = 0; x < x1 - x0; ++x) d[x] += s[x];
          }
        }
      }
    }
  }
}

// out[OC][B][H][W] = kernels[OC][C][5][5] (*) in + bias, stride 1, same pad.
template <class T>
void conv2d_forward(const T* in, int C, int B, int H, int W,
                    const Tensor<T>& kernels, const Tensor<T>& bias, int OC,
                    std::vector<T>& cols_ws, T* out) {
  if (kernels.size() != static_cast<size_t>(OC) * C * kConvK * kConvK ||
      bias.size() != static_cast<size_t>(OC))
    throw std::invalid_argument("conv2d: kernel/bias shape mismatch");
  im2col(in, C, B, H, W, cols_ws);
  const Eigen::Index rows = static_cast<Eigen::Index>(C) * kConvK * kConvK;
  const Eigen::Index ncols = static_cast<Eigen::Index>(B) * H * W;
  ConstMatMap<T> K(kernels.data(), OC, rows);
  ConstMatMap<T> X(cols_ws.data(), rows, ncols);
  MatMap<T> Y(out, OC, ncols);
  Y.noalias() = K * X;
  for (int oc = 0; oc < OC; ++oc) Y.row(oc).array() += bias[oc];
}

// Gradients w.r.t. kernels, bias and (optionally) the input. `cols_ws` must
// still hold the forward im2col buffer for the same input.
template <class T>
void conv2d_backward(const T* dout, int C, int B, int H, int W,
                     const Tensor<T>& kernels, int OC,
                     const std::vector<T>& cols_ws, std::vector<T>& dcols_ws,
                     Tensor<T>& dkernels, Tensor<T>& dbias, T* din) {
  const Eigen::Index rows = static_cast<Eigen::Index>(C) * kConvK * kConvK;
  const Eigen::Index ncols = static_cast<Eigen::Index>(B) * H * W;
  ConstMatMap<T> dY(dout, OC, ncols);
  ConstMatMap<T> X(cols_ws.data(), rows, ncols);
  MatMap<T> dK(dkernels.data(), OC, rows);
  dK.noalias() = dY * X.transpose();
  for (int oc = 0; oc < OC; ++oc) dbias[oc] = dY.row(oc).sum();
  if (din) {
    dcols_ws.resize(static_cast<size_t>(rows) * ncols);
    ConstMatMap<T> K(kernels.data(), OC, rows);
    MatMap<T> dX(dcols_ws.data(), rows, ncols);
    dX.noalias() = K.transpose() * dY;
    col2im(dcols_ws, C, B, H, W, din);
  }
}

template <class T>
void relu_forward(const T* in, size_t n, T* out) {
  for (size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

template <class T>
void relu_backward(const T* dout, const T* in, size_t n, T* din) {
  for (size_t i = 0; i < n; ++i) din[i] = in[i] > T(0) ? dout[i] : T(0);
}

// 2x2 max pooling, stride 2; spatial dims must be even. argmax (0..3, as
// dy*2+dx) is recorded for the backward routing.
template <class T>
void maxpool2x2_forward(const T* in, int C, int B, int H, int W, T* out,
                        uint8_t* argmax) {
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("maxpool2x2: spatial dims must be even");
  const int HO = H / 2, WO = W / 2;
  const size_t tiles = static_cast<size_t>(C) * B;
  for (size_t t = 0; t < tiles; ++t) {
    const T* src = in + t * static_cast<size_t>(H) * W;
    T* dst = out + t * static_cast<size_t>(HO) * WO;
    uint8_t* am = argmax + t * static_cast<size_t>(HO) * WO;
    for (int y = 0; y < HO; ++y)
      for (int x = 0; x < WO; ++x) {
        const T* p = src + static_cast<size_t>(2 * y) * W + 2 * x;
        T best = p[0];
        uint8_t bi = 0;
        if (p[1] > best) { best = p[1]; bi = 1; }
        if (p[W] > best) { best = p[W]; bi = 2; }
        if (p[W + 1] > best) { best = p[W + 1]; bi = 3; }
        dst[static_cast<size_t>(y) * WO + x] = best;
        am[static_cast<size_t>(y) * WO + x] = bi;
      }
  }
}

template <class T>
void maxpool2x2_backward(const T* dout, int C, int B, int H, int W,
                         const uint8_t* argmax, T* din) {
  const int HO = H / 2, WO = W / 2;
  const size_t tiles = static_cast<size_t>(C) * B;
  std::fill(din, din + tiles * static_cast<size_t>(H) * W, T(0));
  for (size_t t = 0; t < tiles; ++t) {
    const T* g = dout + t * static_cast<size_t>(HO) * WO;
    const uint8_t* am = argmax + t * static_cast<size_t>(HO) * WO;
    T* dst = din + t * static_cast<size_t>(H) * W;
    for (int y = 0; y < HO; ++y)
      for (int x = 0; x < WO; ++x) {
        const uint8_t bi = am[static_cast<size_t>(y) * WO + x];
        dst[static_cast<size_t>(2 * y + bi / 2) * W + (2 * x + bi % 2)] +=
            g[static_cast<size_t>(y) * WO + x];
      }
  }
}

// Y[B, FO] = X[B, F] * W^T + b, weights stored [FO, F].
template <class T>
void dense_forward(const T* x, int B, int F, const Tensor<T>& weights,
                   const Tensor<T>& bias, int FO, T* y) {
  ConstMatMap<T> X(x, B, F);
  ConstMatMap<T> Wm(weights.data(), FO, F);
  MatMap<T> Y(y, B, FO);
  Y.noalias() = X * Wm.transpose();
  ConstMatMap<T> bm(bias.data(), 1, FO);
  Y.rowwise() += bm.row(0);
}

template <class T>
void dense_backward(const T* dy, const T* x, int B, int F,
                    const Tensor<T>& weights, int FO, Tensor<T>& dweights,
                    Tensor<T>& dbias, T* dx) {
  ConstMatMap<T> dY(dy, B, FO);
  ConstMatMap<T> X(x, B, F);
  MatMap<T> dW(dweights.data(), FO, F);
  dW.noalias() = dY.transpose() * X;
  MatMap<T> db(dbias.data(), 1, FO);
  db = dY.colwise().sum();
  if (dx) {
    ConstMatMap<T> Wm(weights.data(), FO, F);
    MatMap<T> dX(dx, B, F);
    dX.noalias() = dY * Wm;
  }
}

// Inverted dropout: kept activations are scaled by 1/keep_prob so evaluation
// mode is the identity. The mask is recorded for the backward pass.
template <class T>
void dropout_forward(const T* in, size_t n, double keep_prob, Rng& rng,
                     T* out, uint8_t* mask) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw std::invalid_argument("dropout: keep_prob must be in (0, 1]");
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (size_t i = 0; i < n; ++i) {
    mask[i] = rng.uniform() < keep_prob ? 1 : 0;
    out[i] = mask[i] ? in[i] * scale : T(0);
  }
}

template <class T>
void dropout_backward(const T* dout, const uint8_t* mask, size_t n,
                      double keep_prob, T* din) {
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (size_t i = 0; i < n; ++i) din[i] = mask[i] ? dout[i] * scale : T(0);
}

// Mean softmax cross-entropy over the batch (log-sum-exp stabilized).
// dlogits, when requested, receives (softmax - onehot)/B.
template <class T>
double softmax_cross_entropy(const T* logits, int B, int C,
                             const int* labels, T* dlogits = nullptr,
                             T* probs_out = nullptr) {
  if (B <= 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  double loss = 0.0;
  std::vector<T> p(C);
  for (int b = 0; b < B; ++b) {
    const T* z = logits + static_cast<size_t>(b) * C;
    T zmax = z[0];
    for (int c = 1; c < C; ++c) zmax = std::max(zmax, z[c]);
    double denom = 0.0;
    for (int c = 0; c < C; ++c) denom += std::exp(static_cast<double>(z[c] - zmax));
    const double log_denom = std::log(denom);
    const int y = labels[b];
    if (y < 0 || y >= C)
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    loss += log_denom - static_cast<double>(z[y] - zmax);
    if (dlogits || probs_out) {
      for (int c = 0; c < C; ++c)
        p[c] = static_cast<T>(std::exp(static_cast<double>(z[c] - zmax)) / denom);
      if (probs_out)
        std::memcpy(probs_out + static_cast<size_t>(b) * C, p.data(), C * sizeof(T));
      if (dlogits) {
        T* d = dlogits + static_cast<size_t>(b) * C;
        for (int c = 0; c < C; ++c)
          d[c] = (p[c] - (c == y ? T(1) : T(0))) / static_cast<T>(B);
      }
    }
  }
  return loss / B;
}

// ---------------------------------------------------------------------------
// Adam (bias-corrected form of Kingma & Ba) over an arbitrary parameter list.

template <class T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  long step = 0;
  double alpha = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  template <class Params>
  void init(const Params& params, double alpha_) {
    alpha = alpha_;
    m.clear();
    v.clear();
    for (const auto* t : params) {
      m.emplace_back(t->size(), T(0));
      v.emplace_back(t->size(), T(0));
    }
    step = 0;
  }
};

template <class T>
void adam_step(const std::vector<Tensor<T>*>& params,
               const std::vector<Tensor<T>*>& grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient list mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (size_t g = 0; g < params.size(); ++g) {
    if (params[g]->size() != grads[g]->size() ||
        params[g]->size() != state.m[g].size())
      throw std::invalid_argument("adam_step: shape mismatch");
    T* p = params[g]->data();
    const T* gr = grads[g]->data();
    T* m = state.m[g].data();
    T* v = state.v[g].data();
    const size_t n = params[g]->size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * gr[i];
      v[i] = b2 * v[i] + (T(1) - b2) * gr[i] * gr[i];
      const double mhat = static_cast<double>(m[i]) / bc1;
      const double vhat = static_cast<double>(v[i]) / bc2;
      p[i] -= static_cast<T>(state.alpha * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template <class T>
void sgd_step(const std::vector<Tensor<T>*>& params,
              const std::vector<Tensor<T>*>& grads, double lr) {
  for (size_t g = 0; g < params.size(); ++g) {
    T* p = params[g]->data();
    const T* gr = grads[g]->data();
    for (size_t i = 0; i < params[g]->size(); ++i)
      p[i] -= static_cast<T>(lr) * gr[i];
  }
}

// ---------------------------------------------------------------------------
// Central-difference gradient checker (64-bit path).

struct GradCheckResult {
  double max_rel_error = 0.0;
  long checked = 0;
  long skipped = 0;  // coordinates near a ReLU/pool kink
};

// Compares analytic `grads` against central differences of `loss_only` on up
// to `samples_per_group` coordinates per parameter tensor. `margin` reports
// the smallest |pre-activation| (or pool gap) seen by the last evaluation;
// coordinates whose evaluations come within 10*eps of a kink are excluded.
template <class LossFn, class MarginFn>
GradCheckResult grad_check(LossFn&& loss_only, MarginFn&& margin,
                           const std::vector<Tensor<double>*>& params,
                           const std::vector<Tensor<double>*>& grads,
                           double eps, int samples_per_group, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  GradCheckResult res;
  const double base_loss = loss_only();
  if (!std::isfinite(base_loss))
    throw std::runtime_error("grad_check: non-finite loss");
  const double kink_floor = 10.0 * eps;
  const bool base_clear = margin() >= kink_floor;
  for (size_t g = 0; g < params.size(); ++g) {
    Tensor<double>& p = *params[g];
    const Tensor<double>& an = *grads[g];
    const size_t n = p.size();
    std::vector<size_t> coords;
    if (static_cast<long>(n) <= samples_per_group) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int s = 0; s < samples_per_group; ++s) coords.push_back(rng.below(n));
    }
    for (size_t i : coords) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double lp = loss_only();
      const bool clear_p = margin() >= kink_floor;
      p[i] = saved - eps;
      const double lm = loss_only();
      const bool clear_m = margin() >= kink_floor;
      p[i] = saved;
      if (!base_clear || !clear_p || !clear_m) {
        ++res.skipped;
        continue;
      }
      const double fd = (lp - lm) / (2.0 * eps);
      const double a = an[i];
      const double denom = std::max(std::abs(fd), std::abs(a));
      if (denom < 1e-12) continue;  // both effectively zero
      res.max_rel_error = std::max(res.max_rel_error, std::abs(fd - a) / denom);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace dpcnn::nn
