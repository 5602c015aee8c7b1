// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/windowing.hpp"

#include <algorithm>
#include <string>

#include "vdb/kernels.hpp"

namespace vdb::windowing {

WindowGeometry WindowGeometry::from_shape(const Shape& video,
                                          std::size_t window) {
  WindowGeometry g;
  if (video.size() == 5) {
    g = {video[0], video[1], video[2], video[3], video[4], window};
  } else if (video.size() == 4) {
    g = {1, video[0], video[1], video[2], video[3], window};
  } else {
    throw ShapeError("windowing: expected [F, H, W, C] or [B, F, H, W, C], "
                     "got " + to_string(video));
  }
  g.validate();
  return g;
}

void WindowGeometry::validate() const {
  if (window == 0) throw ShapeError("windowing: window size must be positive");
  if (height % window != 0 || width % window != 0)
    throw ShapeError("window does not tile feature: " + std::to_string(height) +
                     "x" + std::to_string(width) + " with M=" +
                     std::to_string(window));
}

std::vector<std::size_t> partition_rows(const WindowGeometry& g) {
  const std::size_t m = g.window;
  const std::size_t nwc = g.width / m;
  const std::size_t nwin = g.windows_per_video();
  const std::size_t tokens = g.tokens();
  std::vector<std::size_t> perm(g.batch * nwin * tokens);
  std::size_t r = 0;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t n = 0; n < nwin; ++n) {
      const std::size_t wr = n / nwc, wc = n % nwc;
      for (std::size_t f = 0; f < g.frames; ++f)
        for (std::size_t lr = 0; lr < m; ++lr)
          for (std::size_t lc = 0; lc < m; ++lc) {
            const std::size_t y = wr * m + lr, x = wc * m + lc;
            perm[r++] = ((b * g.frames + f) * g.height + y) * g.width + x;
          }
    }
  return perm;
}

namespace {

template <class T>
void gather_rows(const std::vector<std::size_t>& perm, std::size_t c,
                 const T* src, T* dst) {
  for (std::size_t r = 0; r < perm.size(); ++r)
    std::copy_n(src + perm[r] * c, c, dst + r * c);
}

template <class T>
void scatter_rows(const std::vector<std::size_t>& perm, std::size_t c,
                  const T* src, T* dst) {
  for (std::size_t r = 0; r < perm.size(); ++r)
    std::copy_n(src + r * c, c, dst + perm[r] * c);
}

template <class T>
void scatter_rows_add(const std::vector<std::size_t>& perm, std::size_t c,
                      const T* src, T* dst) {
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t k = 0; k < c; ++k) dst[perm[r] * c + k] += src[r * c + k];
}

template <class T>
void gather_rows_add(const std::vector<std::size_t>& perm, std::size_t c,
                     const T* src, T* dst) {
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t k = 0; k < c; ++k) dst[r * c + k] += src[perm[r] * c + k];
}

}  // namespace

template <class T>
Tensor<T> partition(const Tensor<T>& video, std::size_t window) {
  const WindowGeometry g = WindowGeometry::from_shape(video.shape(), window);
  Tensor<T> out(g.windowed_shape());
  gather_rows(partition_rows(g), g.channels, video.ptr(), out.ptr());
  return out;
}

template <class T>
Tensor<T> reverse(const Tensor<T>& windows, const WindowGeometry& g) {
  g.validate();
  require_same_shape(windows.shape(), g.windowed_shape(), "window reverse");
  Tensor<T> out(g.video_shape());
  scatter_rows(partition_rows(g), g.channels, windows.ptr(), out.ptr());
  return out;
}

template <class T>
Var<T> partition(const Var<T>& video, std::size_t window) {
  const WindowGeometry g = WindowGeometry::from_shape(video.shape(), window);
  auto perm = partition_rows(g);
  Tensor<T> out(g.windowed_shape());
  gather_rows(perm, g.channels, video.value().ptr(), out.ptr());
  const std::size_t c = g.channels;
  return record<T>("window_partition", std::move(out), {video},
                   [perm = std::move(perm), c](Node<T>& self) {
                     if (auto gx = parent_grad(self, 0); !gx.empty())
                       scatter_rows_add(perm, c, self.grad.data(), gx.data());
                   });
}

template <class T>
Var<T> reverse(const Var<T>& windows, const WindowGeometry& g) {
  g.validate();
  require_same_shape(windows.shape(), g.windowed_shape(), "window reverse");
  auto perm = partition_rows(g);
  Tensor<T> out(g.video_shape());
  scatter_rows(perm, g.channels, windows.value().ptr(), out.ptr());
  const std::size_t c = g.channels;
  return record<T>("window_reverse", std::move(out), {windows},
                   [perm = std::move(perm), c](Node<T>& self) {
                     if (auto gx = parent_grad(self, 0); !gx.empty())
                       gather_rows_add(perm, c, self.grad.data(), gx.data());
                   });
}

std::size_t round_up(std::size_t n, std::size_t multiple) {
  if (multiple == 0) return n;
  return (n + multiple - 1) / multiple * multiple;
}

namespace {

std::size_t mirror(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

template <class T>
Tensor<T> reflect_pad(const Tensor<T>& video, std::size_t out_h,
                      std::size_t out_w) {
  const Shape& s = video.shape();
  if (s.size() < 3) throw ShapeError("reflect_pad: rank must be >= 3");
  const std::size_t r = s.size();
  const std::size_t h = s[r - 3], w = s[r - 2], c = s[r - 1];
  if (out_h < h || out_w < w)
    throw ShapeError("reflect_pad: target smaller than input");
  const std::size_t lead = video.size() / (h * w * c);
  Shape so = s;
  so[r - 3] = out_h;
  so[r - 2] = out_w;
  Tensor<T> out(so);
  for (std::size_t l = 0; l < lead; ++l)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x)
        std::copy_n(video.ptr() + ((l * h + mirror(y, h)) * w + mirror(x, w)) * c,
                    c, out.ptr() + ((l * out_h + y) * out_w + x) * c);
  return out;
}

template <class T>
Tensor<T> crop(const Tensor<T>& video, std::size_t out_h, std::size_t out_w) {
  const Shape& s = video.shape();
  if (s.size() < 3) throw ShapeError("crop: rank must be >= 3");
  const std::size_t r = s.size();
  const std::size_t h = s[r - 3], w = s[r - 2], c = s[r - 1];
  if (out_h > h || out_w > w) throw ShapeError("crop: target larger than input");
  const std::size_t lead = video.size() / (h * w * c);
  Shape so = s;
  so[r - 3] = out_h;
  so[r - 2] = out_w;
  Tensor<T> out(so);
  for (std::size_t l = 0; l < lead; ++l)
    for (std::size_t y = 0; y < out_h; ++y)
      std::copy_n(video.ptr() + ((l * h + y) * w) * c, out_w * c,
                  out.ptr() + ((l * out_h + y) * out_w) * c);
  return out;
}

#define VDB_INSTANTIATE(T)                                                    \
  template Tensor<T> partition<T>(const Tensor<T>&, std::size_t);             \
  template Tensor<T> reverse<T>(const Tensor<T>&, const WindowGeometry&);     \
  template Var<T> partition<T>(const Var<T>&, std::size_t);                   \
  template Var<T> reverse<T>(const Var<T>&, const WindowGeometry&);           \
  template Tensor<T> reflect_pad<T>(const Tensor<T>&, std::size_t,            \
                                    std::size_t);                             \
  template Tensor<T> crop<T>(const Tensor<T>&, std::size_t, std::size_t);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::windowing
