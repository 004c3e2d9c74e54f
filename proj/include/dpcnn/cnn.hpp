// The post-processing classifier: two 5x5 conv + ReLU + 2x2 max-pool stages
// (32 then 64 features), a 1024-unit dense layer with ReLU and dropout, and a
// dense readout. Input is a single-channel side x side detected image.
#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "dpcnn/nn.hpp"
#include "dpcnn/rng.hpp"
#include "dpcnn/tensor.hpp"

namespace dpcnn {

template <class T>
class Cnn {
 public:
  Cnn(int side, int classes, int batch_capacity)
      : side_(side), classes_(classes), cap_(batch_capacity) {
    if (side < 4 || side % 4 != 0)
      throw std::invalid_argument("Cnn: input side must be a positive multiple of 4");
    h1_ = side / 2;
    h2_ = side / 4;
    flat_ = 64 * h2_ * h2_;
    k1.reshape({32, 1, 5, 5});
    b1.reshape({32});
    k2.reshape({64, 32, 5, 5});
    b2.reshape({64});
    w1.reshape({1024, flat_});
    bd1.reshape({1024});
    w2.reshape({classes_, 1024});
    bd2.reshape({classes_});
    gk1.reshape({32, 1, 5, 5});
    gb1.reshape({32});
    gk2.reshape({64, 32, 5, 5});
    gb2.reshape({64});
    gw1.reshape({1024, flat_});
    gbd1.reshape({1024});
    gw2.reshape({classes_, 1024});
    gbd2.reshape({classes_});
    alloc_buffers();
  }

  int side() const { return side_; }
  int classes() const { return classes_; }
  int batch_capacity() const { return cap_; }
  int flat_features() const { return flat_; }

  // Truncated normal (stddev 0.1, resampled beyond 2 sigma) weights,
  // constant 0.1 biases.
  void init_params(uint64_t seed) {
    int idx = 0;
    for (Tensor<T>* t : params()) {
      Rng rng = make_stream(seed, StreamTag::kParamInit, static_cast<uint64_t>(idx++));
      const bool is_bias = t->ndim == 1;
      for (size_t i = 0; i < t->size(); ++i) {
        if (is_bias) {
          (*t)[i] = static_cast<T>(0.1);
        } else {
          double z = rng.normal();
          while (std::abs(z) > 2.0) z = rng.normal();
          (*t)[i] = static_cast<T>(0.1 * z);
        }
      }
    }
  }

  std::vector<Tensor<T>*> params() {
    return {&k1, &b1, &k2, &b2, &w1, &bd1, &w2, &bd2};
  }
  std::vector<Tensor<T>*> grads() {
    return {&gk1, &gb1, &gk2, &gb2, &gw1, &gbd1, &gw2, &gbd2};
  }
  static std::vector<const char*> param_names() {
    return {"conv1.kernels", "conv1.bias", "conv2.kernels", "conv2.bias",
            "dense1.weights", "dense1.bias", "readout.weights", "readout.bias"};
  }

  // Forward pass on x = [B][side][side] (single channel, channel-major).
  // Returns mean cross-entropy loss; logits stay in `logits`.
  // In training mode dropout consumes `dropout_rng`.
  double forward(const T* x, int B, const int* labels, bool train,
                 Rng* dropout_rng, bool track_margin = false) {
    check_batch(B);
    last_batch_ = B;
    last_train_ = train;
    margin_ = std::numeric_limits<double>::infinity();
    input_ = x;

    nn::conv2d_forward(x, 1, B, side_, side_, k1, b1, 32, cols1_, a1_.data());
    if (track_margin) update_margin(a1_.data(), size_a1(B));
    nn::relu_forward(a1_.data(), size_a1(B), r1_.data());
    nn::maxpool2x2_forward(r1_.data(), 32, B, side_, side_, p1_.data(), am1_.data());
    if (track_margin) update_pool_margin(r1_.data(), 32, B, side_, side_);

    nn::conv2d_forward(p1_.data(), 32, B, h1_, h1_, k2, b2, 64, cols2_, a2_.data());
    if (track_margin) update_margin(a2_.data(), size_a2(B));
    nn::relu_forward(a2_.data(), size_a2(B), r2_.data());
    nn::maxpool2x2_forward(r2_.data(), 64, B, h1_, h1_, p2_.data(), am2_.data());
    if (track_margin) update_pool_margin(r2_.data(), 64, B, h1_, h1_);

    // flatten [64][B][h2*h2] -> [B][64*h2*h2]
    const int tile = h2_ * h2_;
    for (int c = 0; c < 64; ++c)
      for (int b = 0; b < B; ++b)
        std::memcpy(flat_x_.data() + (static_cast<size_t>(b) * flat_ + c * tile),
                    p2_.data() + (static_cast<size_t>(c) * B + b) * tile,
                    static_cast<size_t>(tile) * sizeof(T));

    nn::dense_forward(flat_x_.data(), B, flat_, w1, bd1, 1024, d1_.data());
    if (track_margin) update_margin(d1_.data(), static_cast<size_t>(B) * 1024);
    nn::relu_forward(d1_.data(), static_cast<size_t>(B) * 1024, rd1_.data());

    const T* readout_in = rd1_.data();
    if (train && keep_prob_ < 1.0) {
      if (!dropout_rng)
        throw std::invalid_argument("Cnn::forward: dropout needs an rng in training mode");
      nn::dropout_forward(rd1_.data(), static_cast<size_t>(B) * 1024, keep_prob_,
                          *dropout_rng, drop_.data(), dmask_.data());
      readout_in = drop_.data();
    }
    readout_in_ = readout_in;

    nn::dense_forward(readout_in, B, 1024, w2, bd2, classes_, logits_.data());
    if (!labels) return 0.0;
    return nn::softmax_cross_entropy(logits_.data(), B, classes_, labels,
                                     dlogits_.data());
  }

  // Backward from the stored dlogits. Optionally produces the gradient
  // w.r.t. the input image (needed for the physical layer).
  void backward(T* dinput) {
    const int B = last_batch_;
    nn::dense_backward(dlogits_.data(), readout_in_, B, 1024, w2, classes_, gw2,
                       gbd2, ddrop_.data());
    const T* d_after_relu = ddrop_.data();
    if (last_train_ && keep_prob_ < 1.0) {
      nn::dropout_backward(ddrop_.data(), dmask_.data(),
                           static_cast<size_t>(B) * 1024, keep_prob_, drd1_.data());
      d_after_relu = drd1_.data();
    }
    nn::relu_backward(d_after_relu, d1_.data(), static_cast<size_t>(B) * 1024,
                      dd1_.data());
    nn::dense_backward(dd1_.data(), flat_x_.data(), B, flat_, w1, 1024, gw1, gbd1,
                       dflat_.data());

    const int tile = h2_ * h2_;
    for (int c = 0; c < 64; ++c)
      for (int b = 0; b < B; ++b)
        std::memcpy(dp2_.data() + (static_cast<size_t>(c) * B + b) * tile,
                    dflat_.data() + (static_cast<size_t>(b) * flat_ + c * tile),
                    static_cast<size_t>(tile) * sizeof(T));

    nn::maxpool2x2_backward(dp2_.data(), 64, B, h1_, h1_, am2_.data(), dr2_.data());
    nn::relu_backward(dr2_.data(), a2_.data(), size_a2(B), da2_.data());
    nn::conv2d_backward(da2_.data(), 32, B, h1_, h1_, k2, 64, cols2_, dcols_,
                        gk2, gb2, dp1_.data());

    nn::maxpool2x2_backward(dp1_.data(), 32, B, side_, side_, am1_.data(),
                            dr1_.data());
    nn::relu_backward(dr1_.data(), a1_.data(), size_a1(B), da1_.data());
    nn::conv2d_backward(da1_.data(), 1, B, side_, side_, k1, 32, cols1_, dcols_,
                        gk1, gb1, dinput);
  }

  const T* logits() const { return logits_.data(); }
  double kink_margin() const { return margin_; }
  void set_keep_prob(double p) { keep_prob_ = p; }
  double keep_prob() const { return keep_prob_; }

  // parameter tensors
  Tensor<T> k1, b1, k2, b2, w1, bd1, w2, bd2;
  // matching gradient tensors
  Tensor<T> gk1, gb1, gk2, gb2, gw1, gbd1, gw2, gbd2;

 private:
  void check_batch(int B) const {
    if (B < 1 || B > cap_)
      throw std::invalid_argument("Cnn: batch size out of range");
  }
  size_t size_a1(int B) const { return static_cast<size_t>(32) * B * side_ * side_; }
  size_t size_a2(int B) const { return static_cast<size_t>(64) * B * h1_ * h1_; }

  void update_margin(const T* pre, size_t n) {
    for (size_t i = 0; i < n; ++i)
      margin_ = std::min(margin_, std::abs(static_cast<double>(pre[i])));
  }
  // Pool kink margin: gap between the window max and runner-up.
  void update_pool_margin(const T* in, int C, int B, int H, int W) {
    const size_t tiles = static_cast<size_t>(C) * B;
    for (size_t t = 0; t < tiles; ++t) {
      const T* src = in + t * static_cast<size_t>(H) * W;
      for (int y = 0; y < H; y += 2)
        for (int x = 0; x < W; x += 2) {
          const T* p = src + static_cast<size_t>(y) * W + x;
          T v[4] = {p[0], p[1], p[W], p[W + 1]};
          std::sort(v, v + 4);
          margin_ = std::min(margin_, static_cast<double>(v[3] - v[2]));
        }
    }
  }

  void alloc_buffers() {
    const size_t B = cap_;
    a1_.resize(32 * B * side_ * side_);
    r1_.resize(a1_.size());
    p1_.resize(32 * B * h1_ * h1_);
    am1_.resize(p1_.size());
    a2_.resize(64 * B * h1_ * h1_);
    r2_.resize(a2_.size());
    p2_.resize(64 * B * h2_ * h2_);
    am2_.resize(p2_.size());
    flat_x_.resize(B * flat_);
    d1_.resize(B * 1024);
    rd1_.resize(d1_.size());
    drop_.resize(d1_.size());
    dmask_.resize(d1_.size());
    logits_.resize(B * classes_);
    dlogits_.resize(logits_.size());
    ddrop_.resize(d1_.size());
    drd1_.resize(d1_.size());
    dd1_.resize(d1_.size());
    dflat_.resize(flat_x_.size());
    dp2_.resize(p2_.size());
    dr2_.resize(r2_.size());
    da2_.resize(a2_.size());
    dp1_.resize(p1_.size());
    dr1_.resize(r1_.size());
    da1_.resize(a1_.size());
  }

  int side_, classes_, cap_;
  int h1_ = 0, h2_ = 0, flat_ = 0;
  double keep_prob_ = 0.5;

  int last_batch_ = 0;
  bool last_train_ = false;
  double margin_ = std::numeric_limits<double>::infinity();
  const T* input_ = nullptr;
  const T* readout_in_ = nullptr;

  std::vector<T> cols1_, cols2_, dcols_;
  std::vector<T> a1_, r1_, p1_, a2_, r2_, p2_, flat_x_, d1_, rd1_, drop_;
  std::vector<uint8_t> am1_, am2_, dmask_;
  std::vector<T> logits_, dlogits_;
  std::vector<T> ddrop_, drd1_, dd1_, dflat_, dp2_, dr2_, da2_, dp1_, dr1_, da1_;
};

}  // namespace dpcnn
