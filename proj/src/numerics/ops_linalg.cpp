// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "vdb/kernels.hpp"
#include "vdb/ops.hpp"

namespace vdb::ops {

using kernels::Trans;

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor<T> out({m, n});
  kernels::gemm<T>(Trans::kNo, Trans::kNo, m, n, k, T(1), a.value().ptr(), k,
                   b.value().ptr(), n, T(0), out.ptr(), n);
  return record<T>("matmul", std::move(out), {a, b}, [m, n, k](Node<T>& self) {
    const T* pa = self.parents[0]->value.ptr();
    const T* pb = self.parents[1]->value.ptr();
    if (auto g = parent_grad(self, 0); !g.empty())
      kernels::gemm<T>(Trans::kNo, Trans::kYes, m, k, n, T(1),
                       self.grad.data(), n, pb, n, T(1), g.data(), k);
    if (auto g = parent_grad(self, 1); !g.empty())
      kernels::gemm<T>(Trans::kYes, Trans::kNo, k, n, m, T(1), pa, k,
                       self.grad.data(), n, T(1), g.data(), n);
  });
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const Shape& sx = x.shape();
  if (sx.empty() || w.shape().size() != 2 || w.shape()[0] != sx.back())
    throw ShapeError("linear: input " + to_string(sx) + ", weight " +
                     to_string(w.shape()));
  const std::size_t cin = sx.back();
  const std::size_t cout = w.shape()[1];
  const std::size_t rows = x.size() / cin;
  if (b.defined() && b.size() != cout)
    throw ShapeError("linear: bias " + to_string(b.shape()) + " for " +
                     std::to_string(cout) + " outputs");
  Shape so = sx;
  so.back() = cout;
  Tensor<T> out(so);
  kernels::gemm<T>(Trans::kNo, Trans::kNo, rows, cout, cin, T(1),
                   x.value().ptr(), cin, w.value().ptr(), cout, T(0),
                   out.ptr(), cout);
  if (b.defined()) {
    const T* pb = b.value().ptr();
    for (std::size_t r = 0; r < rows; ++r)
      kernels::axpy<T>(T(1), std::span<const T>(pb, cout),
                       std::span<T>(out.ptr() + r * cout, cout));
  }
  std::vector<Var<T>> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return record<T>(
      "linear", std::move(out), std::move(parents),
      [rows, cin, cout](Node<T>& self) {
        const T* px = self.parents[0]->value.ptr();
        const T* pw = self.parents[1]->value.ptr();
        const T* go = self.grad.data();
        if (auto g = parent_grad(self, 0); !g.empty())
          kernels::gemm<T>(Trans::kNo, Trans::kYes, rows, cin, cout, T(1), go,
                           cout, pw, cout, T(1), g.data(), cin);
        if (auto g = parent_grad(self, 1); !g.empty())
          kernels::gemm<T>(Trans::kYes, Trans::kNo, cin, cout, rows, T(1), px,
                           cin, go, cout, T(1), g.data(), cout);
        if (self.parents.size() > 2)
          if (auto g = parent_grad(self, 2); !g.empty())
            for (std::size_t r = 0; r < rows; ++r)
              kernels::axpy<T>(T(1), std::span<const T>(go + r * cout, cout),
                               g);
      });
}

namespace {

struct ConvGeom {
  std::size_t n, h, w, cin, cout, stride, ho, wo;
};

// col[(oy, ox), (ky, kx, ci)] for one image.
template <class T>
void im2col(const ConvGeom& g, const T* img, T* col) {
  const std::size_t kcols = 9 * g.cin;
  for (std::size_t oy = 0; oy < g.ho; ++oy)
    for (std::size_t ox = 0; ox < g.wo; ++ox) {
      T* row = col + (oy * g.wo + ox) * kcols;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - 1;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx) - 1;
          T* dst = row + (ky * 3 + kx) * g.cin;
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.h) ||
              ix >= static_cast<long>(g.w)) {
            std::fill_n(dst, g.cin, T(0));
          } else {
            std::copy_n(img + (iy * g.w + ix) * g.cin, g.cin, dst);
          }
        }
      }
    }
}

template <class T>
void col2im_add(const ConvGeom& g, const T* col, T* img) {
  const std::size_t kcols = 9 * g.cin;
  for (std::size_t oy = 0; oy < g.ho; ++oy)
    for (std::size_t ox = 0; ox < g.wo; ++ox) {
      const T* row = col + (oy * g.wo + ox) * kcols;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - 1;
        if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx) - 1;
          if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
          const T* src = row + (ky * 3 + kx) * g.cin;
          T* dst = img + (iy * g.w + ix) * g.cin;
          for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
        }
      }
    }
}

}  // namespace

template <class T>
Var<T> conv3x3(const Var<T>& x, const Var<T>& w, const Var<T>& b,
               std::size_t stride) {
  const Shape& sx = x.shape();
  if (sx.size() != 4)
    throw ShapeError("conv3x3: expected [N, H, W, C], got " + to_string(sx));
  ConvGeom g{sx[0], sx[1], sx[2], sx[3], 0, stride, 0, 0};
  if (w.shape().size() != 2 || w.shape()[0] != 9 * g.cin)
    throw ShapeError("conv3x3: weight " + to_string(w.shape()) + " for " +
                     std::to_string(g.cin) + " input channels");
  if (stride != 1 && stride != 2)
    throw ShapeError("conv3x3: stride must be 1 or 2");
  if (stride == 2 && (g.h % 2 || g.w % 2))
    throw ShapeError("conv3x3: stride 2 needs even spatial dims, got " +
                     to_string(sx));
  g.cout = w.shape()[1];
  g.ho = g.h / stride;
  g.wo = g.w / stride;
  if (b.defined() && b.size() != g.cout)
    throw ShapeError("conv3x3: bias size mismatch");

  const std::size_t kcols = 9 * g.cin;
  const std::size_t pix = g.ho * g.wo;
  Tensor<T> out({g.n, g.ho, g.wo, g.cout});
  std::vector<T> col(pix * kcols);
  for (std::size_t i = 0; i < g.n; ++i) {
    im2col(g, x.value().ptr() + i * g.h * g.w * g.cin, col.data());
    T* dst = out.ptr() + i * pix * g.cout;
    kernels::gemm<T>(Trans::kNo, Trans::kNo, pix, g.cout, kcols, T(1),
                     col.data(), kcols, w.value().ptr(), g.cout, T(0), dst,
                     g.cout);
    if (b.defined())
      for (std::size_t p = 0; p < pix; ++p)
        kernels::axpy<T>(T(1), b.value().data(),
                         std::span<T>(dst + p * g.cout, g.cout));
  }

  std::vector<Var<T>> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return record<T>("conv3x3", std::move(out), std::move(parents),
                   [g](Node<T>& self) {
    const std::size_t kcols = 9 * g.cin;
    const std::size_t pix = g.ho * g.wo;
    const T* px = self.parents[0]->value.ptr();
    const T* pw = self.parents[1]->value.ptr();
    auto gx = parent_grad(self, 0);
    auto gw = parent_grad(self, 1);
    std::span<T> gb;
    if (self.parents.size() > 2) gb = parent_grad(self, 2);
    std::vector<T> col(pix * kcols);
    for (std::size_t i = 0; i < g.n; ++i) {
      const T* go = self.grad.data() + i * pix * g.cout;
      if (!gw.empty()) {
        im2col(g, px + i * g.h * g.w * g.cin, col.data());
        kernels::gemm<T>(Trans::kYes, Trans::kNo, kcols, g.cout, pix, T(1),
                         col.data(), kcols, go, g.cout, T(1), gw.data(),
                         g.cout);
      }
      if (!gx.empty()) {
        kernels::gemm<T>(Trans::kNo, Trans::kYes, pix, kcols, g.cout, T(1),
                         go, g.cout, pw, g.cout, T(0), col.data(), kcols);
        col2im_add(g, col.data(), gx.data() + i * g.h * g.w * g.cin);
      }
      if (!gb.empty())
        for (std::size_t p = 0; p < pix; ++p)
          kernels::axpy<T>(T(1), std::span<const T>(go + p * g.cout, g.cout),
                           gb);
    }
  });
}

template <class T>
Var<T> upsample2x(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.size() != 4)
    throw ShapeError("upsample2x: expected [N, H, W, C], got " + to_string(s));
  const std::size_t n = s[0], h = s[1], w = s[2], c = s[3];
  Tensor<T> out({n, 2 * h, 2 * w, c});
  const T* px = x.value().ptr();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        std::copy_n(px + ((i * h + y / 2) * w + xx / 2) * c, c,
                    out.ptr() + ((i * 2 * h + y) * 2 * w + xx) * c);
  return record<T>("upsample2x", std::move(out), {x},
                   [n, h, w, c](Node<T>& self) {
                     auto g = parent_grad(self, 0);
                     if (g.empty()) return;
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t y = 0; y < 2 * h; ++y)
                         for (std::size_t xx = 0; xx < 2 * w; ++xx) {
                           const T* src =
                               self.grad.data() +
                               ((i * 2 * h + y) * 2 * w + xx) * c;
                           T* dst =
                               g.data() + ((i * h + y / 2) * w + xx / 2) * c;
                           for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
                         }
                   });
}

#define VDB_INSTANTIATE(T)                                                   \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                   \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);    \
  template Var<T> conv3x3<T>(const Var<T>&, const Var<T>&, const Var<T>&,    \
                             std::size_t);                                   \
  template Var<T> upsample2x<T>(const Var<T>&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::ops
