// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "vdb/metrics.hpp"
#include "vdb/rng.hpp"

namespace vdb::metrics {
namespace {

using TF = Tensor<float>;
using TD = Tensor<double>;

TD random_image(std::size_t h, std::size_t w, Rng& rng) {
  TD t({h, w, 3});
  for (double& v : t.data()) v = rng.uniform();
  return t;
}

TEST(Psnr, IdenticalImagesAreInfinite) {
  Rng rng(1);
  const TD a = random_image(8, 8, rng);
  EXPECT_EQ(psnr(a, a), kPsnrInf);
  EXPECT_EQ(format_psnr(psnr(a, a)), "inf");
  EXPECT_EQ(format_psnr(20.0), "20.0000");
}

TEST(Psnr, UniformOffset) {
  const TD a = TD::full({4, 4, 3}, 0.5), b = TD::full({4, 4, 3}, 0.6);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_NEAR(psnr(a.cast<float>(), b.cast<float>()), 20.0, 1e-5);
  EXPECT_NEAR(psnr(TD::full({1, 1, 3}, 100.0), TD::full({1, 1, 3}, 125.5), 255.0),
              20 * std::log10(255.0 / 25.5), 1e-9);
}

TEST(Psnr, MatchesDirectFormulaAndIsSymmetric) {
  Rng rng(2);
  const TD a = random_image(13, 9, rng), b = random_image(13, 9, rng);
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double want = 10 * std::log10(1.0 / (se / a.size()));
  EXPECT_NEAR(psnr(a, b), want, 1e-9);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  EXPECT_THROW(psnr(a, random_image(9, 13, rng)), ShapeError);
}

// Direct SSIM: luma, 11x11 Gaussian sigma 1.5, valid positions.
double ssim_oracle(const TD& a, const TD& b) {
  const std::size_t h = a.dim(0), w = a.dim(1);
  const auto luma = [&](const TD& x, std::size_t r, std::size_t c) {
    const double* p = x.ptr() + (r * w + c) * 3;
    return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  };
  double g[11][11], gs = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) gs += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + 11 <= h; ++r)
    for (std::size_t c = 0; c + 11 <= w; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double k = g[i][j] / gs, x = luma(a, r + i, c + j), y = luma(b, r + i, c + j);
          ma += k * x;
          mb += k * y;
          saa += k * x * x;
          sbb += k * y * y;
          sab += k * x * y;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / count;
}

TEST(Ssim, IdenticalIsOne) {
  Rng rng(3);
  const TD a = random_image(16, 20, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, MatchesDirectOracleAndIsSymmetric) {
  Rng rng(4);
  const TD a = random_image(17, 14, rng);
  TD b = a;
  for (double& v : b.data()) v = std::clamp(v + rng.normal(0, 0.1), 0.0, 1.0);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, InvertedCheckerboardIsDissimilar) {
  TD a({24, 24, 3});
  for (std::size_t r = 0; r < 24; ++r)
    for (std::size_t c = 0; c < 24; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) a[(r * 24 + c) * 3 + ch] = ((r / 3 + c / 3) % 2) ? 1.0 : 0.0;
  TD b = a;
  for (double& v : b.data()) v = 1 - v;
  const double s = ssim(a, b);
  EXPECT_LT(s, 0.5);
  EXPECT_NEAR(s, ssim_oracle(a, b), 1e-9);
}

TEST(Ssim, EqualConstantsAreOneAndSmallImagesFail) {
  EXPECT_NEAR(ssim(TD::full({12, 12, 3}, 0.4), TD::full({12, 12, 3}, 0.4)), 1.0, 1e-12);
  EXPECT_THROW(ssim(TD::full({10, 12, 3}, 0.4), TD::full({10, 12, 3}, 0.4)), ShapeError);
}

FeatureSet gaussian_set(std::size_t n, const std::vector<double>& mean, Rng& rng,
                        double sd = 1.0) {
  FeatureSet s;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(mean.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = mean[j] + sd * rng.normal();
    s.append(f);
  }
  return s;
}

TEST(Fid, IdenticalSetsScoreZero) {
  Rng rng(5);
  const FeatureSet a = gaussian_set(50, {0, 1, 2, 3, 4}, rng);
  EXPECT_NEAR(fid(a, a), 0.0, 1e-6);
  EXPECT_GE(fid(a, gaussian_set(50, {0, 1, 2, 3, 4}, rng)), 0.0);
}

TEST(Fid, MeanShiftOfEqualCovarianceGaussians) {
  Rng rng(6);
  const std::vector<double> mu{1.0, 0.5, -0.5, 1.0};
  const FeatureSet a = gaussian_set(10000, {0, 0, 0, 0}, rng);
  const FeatureSet b = gaussian_set(10000, mu, rng);
  EXPECT_NEAR(fid(a, b), 2.5, 0.05 * 2.5);
}

// 2x2 closed form: tr sqrt(M) = sqrt(tr M + 2 sqrt(det M)) for M = Sa Sb.
TEST(Fid, TwoDimensionalClosedForm) {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    FeatureSet a, b;
    for (int i = 0; i < 8; ++i) {
      const double x = rng.normal(), y = rng.normal();
      a.append({x, 0.6 * x + 0.8 * y});
      b.append({1 + 2 * rng.normal(), -1 + 0.5 * rng.normal()});
    }
    const auto stats = [](const FeatureSet& s, double m[2], double c[4]) {
      m[0] = m[1] = 0;
      for (std::size_t i = 0; i < s.n; ++i)
        for (int j = 0; j < 2; ++j) m[j] += s.row(i)[j] / s.n;
      for (int j = 0; j < 4; ++j) c[j] = 0;
      for (std::size_t i = 0; i < s.n; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            c[j * 2 + k] += (s.row(i)[j] - m[j]) * (s.row(i)[k] - m[k]) / (s.n - 1);
    };
    double ma[2], mb[2], ca[4], cb[4];
    stats(a, ma, ca);
    stats(b, mb, cb);
    const double prod_tr = ca[0] * cb[0] + ca[1] * cb[2] + ca[2] * cb[1] + ca[3] * cb[3];
    const double det = (ca[0] * ca[3] - ca[1] * ca[2]) * (cb[0] * cb[3] - cb[1] * cb[2]);
    const double tr_sqrt = std::sqrt(prod_tr + 2 * std::sqrt(det));
    const double want = (ma[0] - mb[0]) * (ma[0] - mb[0]) + (ma[1] - mb[1]) * (ma[1] - mb[1]) +
                        ca[0] + ca[3] + cb[0] + cb[3] - 2 * tr_sqrt;
    EXPECT_NEAR(fid(a, b), want, 1e-8);
  }
}

TEST(Fid, SizeAndDimensionChecks) {
  Rng rng(8);
  EXPECT_THROW(fid(gaussian_set(1, {0, 0}, rng), gaussian_set(5, {0, 0}, rng)), Error);
  EXPECT_THROW(fid(gaussian_set(5, {0, 0}, rng), gaussian_set(5, {0, 0, 0}, rng)), Error);
}

double kid_oracle(const FeatureSet& a, const FeatureSet& b) {
  const auto k = [&](const double* x, const double* y) {
    double dot = 0;
    for (std::size_t j = 0; j < a.d; ++j) dot += x[j] * y[j];
    return std::pow(dot / a.d + 1, 3);
  };
  double xx = 0, yy = 0, xy = 0;
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j)
      if (i != j) xx += k(a.row(i), a.row(j));
  for (std::size_t i = 0; i < b.n; ++i)
    for (std::size_t j = 0; j < b.n; ++j)
      if (i != j) yy += k(b.row(i), b.row(j));
  const bool same_size = a.n == b.n;
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < b.n; ++j)
      if (!same_size || i != j) xy += k(a.row(i), b.row(j));
  const double m = a.n, n = b.n;
  const double cross_pairs = same_size ? m * (m - 1) : m * n;
  return xx / (m * (m - 1)) + yy / (n * (n - 1)) - 2 * xy / cross_pairs;
}

TEST(Kid, TinyHandVectorsMatchDoubleSum) {
  FeatureSet a, b;
  a.append({1.0, 0.0});
  a.append({0.0, 2.0});
  a.append({-1.0, 1.0});
  b.append({0.5, 0.5});
  b.append({2.0, -1.0});
  b.append({0.0, 0.0});
  EXPECT_NEAR(kid(a, b), kid_oracle(a, b), 1e-14);
  double dot = 1.0 * 0.5 + 0.0 * 0.5;
  EXPECT_DOUBLE_EQ(kid_kernel(a.row(0), b.row(0), 2), std::pow(dot / 2 + 1, 3));
  FeatureSet c = b;
  c.append({1.0, 1.0});
  EXPECT_NEAR(kid(a, c), kid_oracle(a, c), 1e-14);
}

TEST(Kid, IdenticalListsScoreZero) {
  Rng rng(9);
  const FeatureSet a = gaussian_set(40, {0.5, -1, 2}, rng);
  EXPECT_LT(std::abs(kid(a, a)), 1e-6);
  EXPECT_GT(kid(a, gaussian_set(30, {3, 3, 3}, rng)), 1.0);
}

TEST(Kid, RandomSetsMatchDoubleSum) {
  Rng rng(10);
  const FeatureSet a = gaussian_set(25, {0, 0, 0, 0}, rng), b = gaussian_set(31, {1, 0, 0, 0}, rng);
  EXPECT_NEAR(kid(a, b), kid_oracle(a, b), 1e-12 * (1 + std::abs(kid_oracle(a, b))));
  EXPECT_GT(kid(a, b), 0.0);
}

TEST(Kid, UnbiasedAcrossResampledSplits) {
  Rng rng(11);
  const int reps = 400;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    const double v = kid(gaussian_set(20, {0, 0, 0}, rng), gaussian_set(25, {0, 0, 0}, rng));
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
  EXPECT_LT(std::abs(mean), 3.5 * se) << mean << " +- " << se;
}

TEST(Kid, ReportedScale) { EXPECT_DOUBLE_EQ(kid_x1000(0.0021), 2.1); }

TEST(Patches, FullScaleAndDeskCounts) {
  EXPECT_EQ(patch_count(720, 1280, {240, 0}), 15u);
  EXPECT_EQ(patch_count(48, 48, {16, 0}), 9u);
  EXPECT_EQ(patch_count(48, 48, {16, 4}), 4u);
  EXPECT_EQ(patch_split(TF({720, 1280, 3}), {240, 0}).size(), 15u);
  EXPECT_THROW(patch_split(TF({8, 30, 3}), {16, 0}), Error);
}

TEST(Patches, ReassemblyReproducesCoveredRegion) {
  Rng rng(12);
  TF frame({50, 37, 3});
  for (float& v : frame.data()) v = static_cast<float>(rng.uniform());
  const auto patches = patch_split(frame, {16, 0});
  ASSERT_EQ(patches.size(), 6u);  // 3 rows x 2 columns
  for (std::size_t k = 0; k < patches.size(); ++k) {
    ASSERT_EQ(patches[k].shape(), (Shape{16, 16, 3}));
    const std::size_t pr = k / 2, pc = k % 2;
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c)
        for (std::size_t ch = 0; ch < 3; ++ch)
          ASSERT_EQ(patches[k][(r * 16 + c) * 3 + ch],
                    frame[((pr * 16 + r) * 37 + pc * 16 + c) * 3 + ch]);
  }
}

TEST(Features, DeterministicAndPooledAcrossFrames) {
  Rng rng(13);
  std::vector<TF> frames;
  for (int f = 0; f < 3; ++f) {
    TF t({32, 48, 3});
    for (float& v : t.data()) v = static_cast<float>(rng.uniform());
    frames.push_back(t);
  }
  const RandomProjectionExtractor fx;
  EXPECT_EQ(fx.dim(), 32u);
  EXPECT_FALSE(fx.name().empty());
  const PatchSpec spec{16, 0};
  const FeatureSet all = extract_all(fx, frames, spec);
  EXPECT_EQ(all.n, 3u * 6u);
  EXPECT_EQ(all.d, 32u);
  // Concatenating per-frame feature sets gives the same pooled set.
  FeatureSet concat;
  for (const TF& f : frames)
    for (const TF& p : patch_split(f, spec)) concat.append(fx.extract(p));
  EXPECT_EQ(concat.values, all.values);
  EXPECT_EQ(extract_all(fx, frames, spec).values, all.values);
  // Different seeds give different maps.
  EXPECT_NE(RandomProjectionExtractor(32, 1).extract(frames[0]), fx.extract(frames[0]));
}

TEST(Features, SeparateBlurFromSharp) {
  // A blurred texture should sit farther from the original than a second
  // draw of the same texture.
  Rng rng(14);
  std::vector<TF> sharp, sharp2, blurred;
  for (int f = 0; f < 8; ++f) {
    TF a({32, 32, 3}), b({32, 32, 3});
    for (float& v : a.data()) v = rng.uniform() < 0.5 ? 0.1f : 0.9f;
    for (float& v : b.data()) v = rng.uniform() < 0.5 ? 0.1f : 0.9f;
    TF c = a;
    for (std::size_t r = 0; r < 32; ++r)
      for (std::size_t col = 0; col < 32; ++col)
        for (std::size_t ch = 0; ch < 3; ++ch) {
          float acc = 0;
          for (int d = 0; d < 4; ++d) acc += a[(r * 32 + (col + d) % 32) * 3 + ch];
          c[(r * 32 + col) * 3 + ch] = acc / 4;
        }
    sharp.push_back(a);
    sharp2.push_back(b);
    blurred.push_back(c);
  }
  const RandomProjectionExtractor fx;
  const FeatureSet fs = extract_all(fx, sharp, {16, 0});
  EXPECT_GT(fid(fs, extract_all(fx, blurred, {16, 0})), 10 * fid(fs, extract_all(fx, sharp2, {16, 0})));
}

}  // namespace
}  // namespace vdb::metrics
