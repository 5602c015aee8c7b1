// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Image quality metrics. Images are [H, W, 3] with values in [0, peak].
// FID and KID work on feature sets pooled over every patch of every frame.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "vdb/tensor.hpp"

namespace vdb::metrics {

inline constexpr double kPsnrInf = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); kPsnrInf when the images are identical.
template <class T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);
/// "inf" for the identical-image sentinel, else fixed with 4 decimals.
std::string format_psnr(double db);

/// Mean SSIM of the Rec.601 luma of two RGB images, 11x11 Gaussian window
/// (sigma 1.5), valid positions only, data range `peak`.
template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

/// Row-major feature matrix [n, d].
struct FeatureSet {
  std::size_t n = 0, d = 0;
  std::vector<double> values;

  FeatureSet() = default;
  FeatureSet(std::size_t rows, std::size_t cols)
      : n(rows), d(cols), values(rows * cols) {}
  const double* row(std::size_t i) const { return values.data() + i * d; }
  double* row(std::size_t i) { return values.data() + i * d; }
  void append(const std::vector<double>& feature);
};

/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}) with unbiased
/// covariances.
double fid(const FeatureSet& a, const FeatureSet& b);

/// k(x, y) = (x.y / d + 1)^3
double kid_kernel(const double* x, const double* y, std::size_t d);
/// Unbiased MMD^2. With equal set sizes the cross term also skips i == j,
/// so a set compared with itself scores exactly 0.
double kid(const FeatureSet& a, const FeatureSet& b);
inline double kid_x1000(double raw) { return raw * 1000.0; }

struct PatchSpec {
  std::size_t size = 16;
  std::size_t max_count = 0;  // 0 keeps all
};

/// Non-overlapping raster-order tiles of a [H, W, C] frame.
std::vector<Tensor<float>> patch_split(const Tensor<float>& frame,
                                       const PatchSpec& spec);
std::size_t patch_count(std::size_t h, std::size_t w, const PatchSpec& spec);

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> extract(const Tensor<float>& patch) const = 0;
};

/// tanh(W v + b) on every 3x3 RGB neighbourhood v (27 values), averaged over
/// positions. W and b are drawn from a seeded normal generator.
class RandomProjectionExtractor final : public FeatureExtractor {
 public:
  explicit RandomProjectionExtractor(std::size_t dim = 32,
                                     std::uint64_t seed = 20240917);
  std::string name() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<double> extract(const Tensor<float>& patch) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> weight_;  // [dim, 27]
  std::vector<double> bias_;
};

/// Features of every patch of every frame, in order.
FeatureSet extract_all(const FeatureExtractor& fx,
                       const std::vector<Tensor<float>>& frames,
                       const PatchSpec& spec);

}  // namespace vdb::metrics
