// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "vdb/ops.hpp"

namespace vdb::ops {
namespace {

// Normalizes `count` independent groups. Group g covers rows
// [row_begin(g), ...) of `channels`-wide rows, restricted to channel slice
// [c0, c0 + cg). Layer norm is the special case of one row, full width.
struct NormLayout {
  std::size_t images;    // outer groups
  std::size_t pixels;    // rows per image
  std::size_t channels;  // row width
  std::size_t groups;    // channel groups per image
};

template <class T>
struct NormSaved {
  std::vector<T> xhat;
  std::vector<T> inv_std;  // per (image, group)
};

template <class T>
NormSaved<T> normalize(const NormLayout& L, const T* x, T eps) {
  const std::size_t cg = L.channels / L.groups;
  const double count = static_cast<double>(L.pixels * cg);
  NormSaved<T> s;
  s.xhat.resize(L.images * L.pixels * L.channels);
  s.inv_std.resize(L.images * L.groups);
  for (std::size_t n = 0; n < L.images; ++n) {
    const T* img = x + n * L.pixels * L.channels;
    T* out = s.xhat.data() + n * L.pixels * L.channels;
    for (std::size_t g = 0; g < L.groups; ++g) {
      double mean = 0.0;
      for (std::size_t p = 0; p < L.pixels; ++p)
        for (std::size_t c = g * cg; c < (g + 1) * cg; ++c)
          mean += img[p * L.channels + c];
      mean /= count;
      double var = 0.0;
      for (std::size_t p = 0; p < L.pixels; ++p)
        for (std::size_t c = g * cg; c < (g + 1) * cg; ++c) {
          const double d = img[p * L.channels + c] - mean;
          var += d * d;
        }
      var /= count;
      const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
      s.inv_std[n * L.groups + g] = static_cast<T>(inv);
      for (std::size_t p = 0; p < L.pixels; ++p)
        for (std::size_t c = g * cg; c < (g + 1) * cg; ++c)
          out[p * L.channels + c] =
              static_cast<T>((img[p * L.channels + c] - mean) * inv);
    }
  }
  return s;
}

template <class T>
Var<T> affine_norm(const char* name, const Var<T>& x, const NormLayout& L,
                   const Var<T>& gamma, const Var<T>& beta, T eps) {
  if (gamma.size() != L.channels || beta.size() != L.channels)
    throw ShapeError(std::string(name) + ": affine parameters must have " +
                     std::to_string(L.channels) + " entries");
  auto saved = std::make_shared<NormSaved<T>>(normalize(L, x.value().ptr(), eps));
  Tensor<T> out(x.shape());
  const T* pg = gamma.value().ptr();
  const T* pb = beta.value().ptr();
  const std::size_t rows = L.images * L.pixels;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < L.channels; ++c)
      out[r * L.channels + c] =
          saved->xhat[r * L.channels + c] * pg[c] + pb[c];

  return record<T>(name, std::move(out), {x, gamma, beta},
                   [L, saved](Node<T>& self) {
    const std::size_t cg = L.channels / L.groups;
    const std::size_t rows = L.images * L.pixels;
    const T* go = self.grad.data();
    const T* pg = self.parents[1]->value.ptr();
    const std::vector<T>& xhat = saved->xhat;
    if (auto g = parent_grad(self, 1); !g.empty())
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < L.channels; ++c)
          g[c] += go[r * L.channels + c] * xhat[r * L.channels + c];
    if (auto g = parent_grad(self, 2); !g.empty())
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < L.channels; ++c)
          g[c] += go[r * L.channels + c];
    auto gx = parent_grad(self, 0);
    if (gx.empty()) return;
    const double count = static_cast<double>(L.pixels * cg);
    for (std::size_t n = 0; n < L.images; ++n) {
      const std::size_t base = n * L.pixels * L.channels;
      for (std::size_t grp = 0; grp < L.groups; ++grp) {
        double m1 = 0.0, m2 = 0.0;  // mean(dxhat), mean(dxhat * xhat)
        for (std::size_t p = 0; p < L.pixels; ++p)
          for (std::size_t c = grp * cg; c < (grp + 1) * cg; ++c) {
            const std::size_t i = base + p * L.channels + c;
            const double dxh = static_cast<double>(go[i]) * pg[c];
            m1 += dxh;
            m2 += dxh * xhat[i];
          }
        m1 /= count;
        m2 /= count;
        const double inv = saved->inv_std[n * L.groups + grp];
        for (std::size_t p = 0; p < L.pixels; ++p)
          for (std::size_t c = grp * cg; c < (grp + 1) * cg; ++c) {
            const std::size_t i = base + p * L.channels + c;
            const double dxh = static_cast<double>(go[i]) * pg[c];
            gx[i] += static_cast<T>(inv * (dxh - m1 - xhat[i] * m2));
          }
      }
    }
  });
}

}  // namespace

template <class T>
Var<T> group_norm(const Var<T>& x, std::size_t groups, const Var<T>& gamma,
                  const Var<T>& beta, T eps) {
  const Shape& s = x.shape();
  if (s.size() != 4)
    throw ShapeError("group_norm: expected [N, H, W, C], got " + to_string(s));
  if (groups == 0 || s[3] % groups != 0)
    throw ShapeError("group_norm: " + std::to_string(s[3]) +
                     " channels not divisible into " + std::to_string(groups) +
                     " groups");
  return affine_norm<T>("group_norm", x, {s[0], s[1] * s[2], s[3], groups},
                        gamma, beta, eps);
}

template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  T eps) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("layer_norm: rank-0 input");
  const std::size_t c = s.back();
  return affine_norm<T>("layer_norm", x, {x.size() / c, 1, c, 1}, gamma, beta,
                        eps);
}

#define VDB_INSTANTIATE(T)                                                  \
  template Var<T> group_norm<T>(const Var<T>&, std::size_t, const Var<T>&,  \
                                const Var<T>&, T);                          \
  template Var<T> layer_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, \
                                T);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::ops
