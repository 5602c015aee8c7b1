// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <cstdio>

#include "vdb/errors.hpp"
#include "vdb/metrics.hpp"

namespace vdb::metrics {

template <class T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  require_same_shape(a.shape(), b.shape(), "psnr");
  if (!(peak > 0)) throw UsageError("psnr: peak must be positive");
  if (a.empty()) throw ShapeError("psnr: empty images");
  double sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0) return kPsnrInf;
  return 10.0 * std::log10(peak * peak / mse);
}

std::string format_psnr(double db) {
  if (std::isinf(db) && db > 0) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", db);
  return buf;
}

namespace {

constexpr std::size_t kWin = 11;

std::array<double, kWin> gaussian_taps() {
  std::array<double, kWin> g{};
  double total = 0;
  for (std::size_t i = 0; i < kWin; ++i) {
    const double x = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-x * x / (2 * 1.5 * 1.5));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

template <class T>
std::vector<double> luma(const Tensor<T>& img) {
  if (img.rank() != 3 || img.dim(2) != 3)
    throw ShapeError("ssim: expected [H, W, 3], got " + to_string(img.shape()));
  const std::size_t n = img.dim(0) * img.dim(1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = 0.299 * img[3 * i] + 0.587 * img[3 * i + 1] + 0.114 * img[3 * i + 2];
  return y;
}

// Separable valid-mode Gaussian filter of an h x w plane.
std::vector<double> blur_valid(const std::vector<double>& x, std::size_t h,
                               std::size_t w, const std::array<double, kWin>& g) {
  const std::size_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> rows(h * ow), out(oh * ow);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0;
      for (std::size_t k = 0; k < kWin; ++k) acc += g[k] * x[r * w + c + k];
      rows[r * ow + c] = acc;
    }
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0;
      for (std::size_t k = 0; k < kWin; ++k) acc += g[k] * rows[(r + k) * ow + c];
      out[r * ow + c] = acc;
    }
  return out;
}

}  // namespace

template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  const std::vector<double> x = luma(a), y = luma(b);
  const std::size_t h = a.dim(0), w = a.dim(1);
  if (h < kWin || w < kWin)
    throw ShapeError("ssim: image " + std::to_string(h) + "x" +
                     std::to_string(w) + " smaller than the 11x11 window");
  const auto g = gaussian_taps();
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = blur_valid(x, h, w, g), my = blur_valid(y, h, w, g);
  const auto sxx = blur_valid(xx, h, w, g), syy = blur_valid(yy, h, w, g),
             sxy = blur_valid(xy, h, w, g);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

std::size_t patch_count(std::size_t h, std::size_t w, const PatchSpec& spec) {
  if (spec.size == 0) throw UsageError("patch size must be positive");
  if (spec.size > h || spec.size > w)
    throw UsageError("patch size " + std::to_string(spec.size) +
                     " larger than frame " + std::to_string(h) + "x" +
                     std::to_string(w));
  const std::size_t n = (h / spec.size) * (w / spec.size);
  return spec.max_count ? std::min(n, spec.max_count) : n;
}

std::vector<Tensor<float>> patch_split(const Tensor<float>& frame,
                                       const PatchSpec& spec) {
  if (frame.rank() != 3)
    throw ShapeError("patch_split: expected [H, W, C], got " +
                     to_string(frame.shape()));
  const std::size_t h = frame.dim(0), w = frame.dim(1), c = frame.dim(2);
  const std::size_t count = patch_count(h, w, spec), p = spec.size;
  const std::size_t cols = w / p;
  std::vector<Tensor<float>> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t top = (k / cols) * p, left = (k % cols) * p;
    Tensor<float> patch({p, p, c});
    for (std::size_t r = 0; r < p; ++r) {
      const float* src = frame.ptr() + ((top + r) * w + left) * c;
      std::copy(src, src + p * c, patch.ptr() + r * p * c);
    }
    out.push_back(std::move(patch));
  }
  return out;
}

#define VDB_INSTANTIATE(T)                                             \
  template double psnr<T>(const Tensor<T>&, const Tensor<T>&, double); \
  template double ssim<T>(const Tensor<T>&, const Tensor<T>&, double);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::metrics
