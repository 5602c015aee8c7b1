// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-frame relative positional encoding: a learnable per-frame offset added
// to features, and a spatial relative-position bias shared by every frame
// pair of a window.

#pragma once

#include <cstddef>
#include <vector>

#include "vdb/autograd.hpp"
#include "vdb/rng.hpp"

namespace vdb::mrpe {

/// Number of distinct in-window offsets: (2M - 1)^2.
constexpr std::size_t bias_table_size(std::size_t window) {
  return (2 * window - 1) * (2 * window - 1);
}

/// For tokens i = (ri, ci) and j = (rj, cj) of an M x M window (raster
/// order), entry i * M^2 + j is (ri - rj + M - 1) * (2M - 1) + (ci - cj + M - 1).
std::vector<std::size_t> relative_index_map(std::size_t window);

/// out[b, f, h, w, c] = x[b, f, h, w, c] + table[f, c]. x is [F, H, W, C] or
/// [B, F, H, W, C]; table is [F, C].
template <class T>
Var<T> add_frame_pe(const Var<T>& x, const Var<T>& table);

/// Gathers B_img from a bias table. A [K] table gives [M^2, M^2]; a
/// [heads, K] table gives [heads, M^2, M^2].
template <class T>
Var<T> build_b_img(const Var<T>& table, std::size_t window);

/// Repeats B_img as an F x F grid of identical blocks:
/// out[f1 * L + i, f2 * L + j] = b_img[i, j] for L = M^2. Accepts [L, L] or
/// [heads, L, L].
template <class T>
Var<T> tile_to_video(const Var<T>& b_img, std::size_t frames);

/// Zero-initialized [F, C] table.
template <class T>
Tensor<T> init_frame_pe(std::size_t frames, std::size_t channels);
/// [heads, (2M-1)^2] table drawn from N(0, 0.02^2).
template <class T>
Tensor<T> init_bias_table(std::size_t window, std::size_t heads, Rng& rng);

}  // namespace vdb::mrpe
