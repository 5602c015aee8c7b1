// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable tensor operations. All take and return Var<T>; layouts are
// row-major and channels-last. Images are [N, H, W, C] with N = batch*frames.

#pragma once

#include <cstddef>
#include <string_view>

#include "vdb/autograd.hpp"

namespace vdb::ops {

template <class T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

// Elementwise, equal shapes.
template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> scale(const Var<T>& a, T s);
/// x * sigmoid(x)
template <class T>
Var<T> swish(const Var<T>& x);

// Reductions to shape [1].
template <class T>
Var<T> sum(const Var<T>& x);
template <class T>
Var<T> mean(const Var<T>& x);
/// mean((a - b)^2)
template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b);
/// sum(x * w) for a constant weight tensor of x's shape.
template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w);

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape);
/// Concatenate along the last dimension; leading dims must match.
template <class T>
Var<T> concat_last(const Var<T>& a, const Var<T>& b);

/// x viewed as [outer, groups, inner, channels]; y is [groups, channels] and
/// is broadcast over outer and inner.
struct BroadcastDims {
  std::size_t outer = 1;
  std::size_t groups = 1;
  std::size_t inner = 1;
  std::size_t channels = 1;
};
template <class T>
Var<T> broadcast_add(const Var<T>& x, const Var<T>& y, BroadcastDims dims);

/// [m, k] x [k, n]
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);
/// x[..., cin] * w[cin, cout] + b[cout]. `b` may be undefined.
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);
/// 3x3 convolution, zero padding 1, per image. x [N, H, W, cin],
/// w [9 * cin, cout] with row (ky * 3 + kx) * cin + ci, b [cout].
/// stride 2 requires even H and W.
template <class T>
Var<T> conv3x3(const Var<T>& x, const Var<T>& w, const Var<T>& b,
               std::size_t stride);
/// Nearest-neighbour x2 upsampling of [N, H, W, C].
template <class T>
Var<T> upsample2x(const Var<T>& x);

/// Group normalization of [N, H, W, C] over (H, W, C / groups) per image.
template <class T>
Var<T> group_norm(const Var<T>& x, std::size_t groups, const Var<T>& gamma,
                  const Var<T>& beta, T eps = T(1e-5));
/// Layer normalization over the last dimension.
template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  T eps = T(1e-5));

/// Multi-head scaled dot-product attention, independently per window.
/// q, k, v: [windows, L, C] with C = heads * D; bias: [heads, L, L] added to
/// the logits of every window (may be undefined). Logits are scaled by
/// 1/sqrt(D).
template <class T>
Var<T> multihead_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                           const Var<T>& bias, std::size_t heads);

/// Softmax weights [windows, heads, L, L] that multihead_attention applies.
template <class T>
Tensor<T> attention_probs(const Tensor<T>& q, const Tensor<T>& k,
                          const Tensor<T>* bias, std::size_t heads);

/// Throws NumericalError naming `where` if x holds NaN or Inf.
template <class T>
const Var<T>& check_finite(const Var<T>& x, std::string_view where);

}  // namespace vdb::ops
