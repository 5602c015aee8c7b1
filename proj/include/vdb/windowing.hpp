// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Rearrangement between frame-major video features [B, F, H, W, C] and
// window-major token sequences [B * N, F * M * M, C].
//
// Window n = wr * (W / M) + wc covers rows wr*M.. and columns wc*M.. of every
// frame. Inside a window, tokens are ordered frame-major then raster:
// token = f * M * M + local_row * M + local_col. This order is part of the
// checkpoint contract.

#pragma once

#include <cstddef>
#include <vector>

#include "vdb/autograd.hpp"

namespace vdb::windowing {

struct WindowGeometry {
  std::size_t batch = 1;
  std::size_t frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;
  std::size_t window = 1;

  /// Reads B, F, H, W, C from a rank-5 shape, or F, H, W, C (B = 1) from a
  /// rank-4 one. Throws ShapeError when the window does not tile the frame.
  static WindowGeometry from_shape(const Shape& video, std::size_t window);

  std::size_t windows_per_video() const {
    return (height / window) * (width / window);
  }
  std::size_t tokens() const { return frames * window * window; }
  Shape video_shape() const { return {batch, frames, height, width, channels}; }
  Shape windowed_shape() const {
    return {batch * windows_per_video(), tokens(), channels};
  }
  void validate() const;
};

/// Row permutation: entry r of the windowed layout (a C-wide row) comes from
/// row perm[r] of the video layout.
std::vector<std::size_t> partition_rows(const WindowGeometry& g);

template <class T>
Tensor<T> partition(const Tensor<T>& video, std::size_t window);
/// Inverse of partition. Output has rank 5 ([B, F, H, W, C]).
template <class T>
Tensor<T> reverse(const Tensor<T>& windows, const WindowGeometry& g);

template <class T>
Var<T> partition(const Var<T>& video, std::size_t window);
template <class T>
Var<T> reverse(const Var<T>& windows, const WindowGeometry& g);

/// Smallest multiple of `multiple` that is >= n.
std::size_t round_up(std::size_t n, std::size_t multiple);

/// Mirror-pads [.., H, W, C] at the bottom and right edges up to (H', W')
/// without repeating the edge sample.
template <class T>
Tensor<T> reflect_pad(const Tensor<T>& video, std::size_t out_h,
                      std::size_t out_w);
/// Keeps the top-left (h, w) region of [.., H, W, C].
template <class T>
Tensor<T> crop(const Tensor<T>& video, std::size_t h, std::size_t w);

}  // namespace vdb::windowing
