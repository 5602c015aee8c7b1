// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Window-based temporal self-attention and the UNet block built around it:
// ResBlock -> frame positional encoding -> WTSA(M1) -> ... -> WTSA(M4).
//
// A WTSA module is pre-norm attention with a residual connection:
//   out = x + reverse(proj(attn(q, k, v, B_video)))  with q, k, v computed from
// layer_norm(x) per token. There is no feed-forward sublayer.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "vdb/layers.hpp"

namespace vdb::wtsa {

/// Which parts of the block are active. Inactive parts keep their parameters
/// (checkpoint layout is fixed) but never enter the graph.
struct AblationFlags {
  bool wtsa = true;  // false: block is ResBlock only
  bool mpe = true;   // multi-frame positional encoding
  bool rpb = true;   // relative position bias

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

using WindowSizes = std::array<std::size_t, 4>;
inline constexpr WindowSizes kDefaultWindows{6, 4, 3, 2};

/// max(1, C / 32)
std::size_t heads_for(std::size_t channels);

template <class T>
struct WtsaParams {
  std::size_t window = 1;
  std::size_t heads = 1;
  nn::Norm<T> norm;
  nn::Linear<T> q, k, v, proj;
  Var<T> bias_table;  // [heads, (2M - 1)^2]

  static WtsaParams make(nn::ParamSet<T>& ps, const std::string& name,
                         std::size_t channels, std::size_t window, Rng& rng);
};

/// Single-head attention SoftMax(Q K^T / sqrt(D) + B) V for Q, K, V [L, D]
/// and B [L, L].
template <class T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 const Var<T>& b_video);

/// Softmax weights of multi-head attention, [windows, heads, L, L]. For
/// inspection; not differentiable.
template <class T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k,
                            const Tensor<T>* bias, std::size_t heads);

/// x: [B, F, H, W, C] (or [F, H, W, C]); H and W divisible by the window.
template <class T>
Var<T> wtsa_forward(const Var<T>& x, const WtsaParams<T>& p, bool use_bias);

template <class T>
struct ResBlockParams {
  std::size_t groups = 8;
  nn::Norm<T> norm;
  nn::Conv3x3<T> conv1, conv2;
  nn::Linear<T> temb;
  nn::Linear<T> skip;  // undefined when in == out

  static ResBlockParams make(nn::ParamSet<T>& ps, const std::string& name,
                             std::size_t in, std::size_t out,
                             std::size_t temb_dim, std::size_t groups, Rng& rng);
};

/// GN -> swish -> conv -> + shift(t) -> swish -> conv, plus residual.
/// x: [B, F, H, W, Cin], temb: [B, E] (already activated).
template <class T>
Var<T> resblock_forward(const Var<T>& x, const Var<T>& temb,
                        const ResBlockParams<T>& p);

template <class T>
struct BlockParams {
  ResBlockParams<T> res;
  Var<T> frame_pe;  // [F, Cout]
  std::vector<WtsaParams<T>> attn;

  static BlockParams make(nn::ParamSet<T>& ps, const std::string& name,
                          std::size_t in, std::size_t out, std::size_t frames,
                          std::size_t temb_dim, std::size_t groups,
                          const WindowSizes& windows, Rng& rng);
};

template <class T>
Var<T> block_forward(const Var<T>& x, const Var<T>& temb,
                     const BlockParams<T>& p, const AblationFlags& flags);

}  // namespace vdb::wtsa
