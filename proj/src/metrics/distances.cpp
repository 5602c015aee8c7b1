// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "vdb/errors.hpp"
#include "vdb/metrics.hpp"
#include "vdb/rng.hpp"

namespace vdb::metrics {

void FeatureSet::append(const std::vector<double>& feature) {
  if (n == 0 && d == 0) d = feature.size();
  if (feature.size() != d)
    throw ShapeError("feature of dimension " + std::to_string(feature.size()) +
                     " added to a set of dimension " + std::to_string(d));
  values.insert(values.end(), feature.begin(), feature.end());
  ++n;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_sets(const FeatureSet& a, const FeatureSet& b, const char* what) {
  if (a.n < 2 || b.n < 2)
    throw UsageError(std::string(what) + ": each set needs at least 2 features");
  if (a.d != b.d || a.d == 0)
    throw ShapeError(std::string(what) + ": feature dimensions " +
                     std::to_string(a.d) + " and " + std::to_string(b.d));
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>
as_matrix(const FeatureSet& s) {
  return {s.values.data(), static_cast<Eigen::Index>(s.n),
          static_cast<Eigen::Index>(s.d)};
}

// Eigenvalues below -tol are a real failure; the rest are rounding noise.
VectorXd clipped(const VectorXd& ev, const char* what) {
  const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  VectorXd out = ev;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol) {
      std::ostringstream msg;
      msg << "fid: " << what << " is not positive semi-definite (eigenvalue "
          << ev[i] << ", tolerance " << tol << ", spectrum ["
          << ev.minCoeff() << ", " << ev.maxCoeff() << "])";
      throw NumericalError(msg.str());
    }
    out[i] = std::max(ev[i], 0.0);
  }
  return out;
}

}  // namespace

double fid(const FeatureSet& a, const FeatureSet& b) {
  check_sets(a, b, "fid");
  const auto xa = as_matrix(a);
  const auto xb = as_matrix(b);
  const VectorXd mu_a = xa.colwise().mean().transpose();
  const VectorXd mu_b = xb.colwise().mean().transpose();
  const MatrixXd ca = xa.rowwise() - mu_a.transpose();
  const MatrixXd cb = xb.rowwise() - mu_b.transpose();
  const MatrixXd sa = (ca.transpose() * ca) / static_cast<double>(a.n - 1);
  const MatrixXd sb = (cb.transpose() * cb) / static_cast<double>(b.n - 1);

  // tr((Sa Sb)^{1/2}) = tr((Sa^{1/2} Sb Sa^{1/2})^{1/2}); the inner matrix is
  // symmetric PSD, so both roots come from symmetric eigendecompositions.
  Eigen::SelfAdjointEigenSolver<MatrixXd> ea(sa);
  const VectorXd ra = clipped(ea.eigenvalues(), "covariance").cwiseSqrt();
  const MatrixXd root_a =
      ea.eigenvectors() * ra.asDiagonal() * ea.eigenvectors().transpose();
  MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  const double tr_root = clipped(ei.eigenvalues(), "covariance product")
                             .cwiseSqrt()
                             .sum();
  const double value =
      (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_root;
  return std::max(value, 0.0);
}

double kid_kernel(const double* x, const double* y, std::size_t d) {
  double dot = 0;
  for (std::size_t k = 0; k < d; ++k) dot += x[k] * y[k];
  const double v = dot / static_cast<double>(d) + 1.0;
  return v * v * v;
}

double kid(const FeatureSet& a, const FeatureSet& b) {
  check_sets(a, b, "kid");
  const std::size_t m = a.n, n = b.n, d = a.d;
  double kxx = 0, kyy = 0, kxy = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) kxx += kid_kernel(a.row(i), a.row(j), d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) kyy += kid_kernel(b.row(i), b.row(j), d);
  const bool paired = m == n;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!paired || i != j) kxy += kid_kernel(a.row(i), b.row(j), d);
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  const double cross = paired ? dm * (dm - 1) : dm * dn;
  return kxx / (dm * (dm - 1)) + kyy / (dn * (dn - 1)) - 2.0 * kxy / cross;
}

RandomProjectionExtractor::RandomProjectionExtractor(std::size_t dim,
                                                     std::uint64_t seed)
    : dim_(dim), seed_(seed), weight_(dim * 27), bias_(dim) {
  if (dim == 0) throw UsageError("feature dimension must be positive");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(27.0);
  for (double& w : weight_) w = 4.0 * scale * rng.normal();
  for (double& b : bias_) b = rng.normal();
}

std::string RandomProjectionExtractor::name() const {
  return "randproj3x3-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

std::vector<double> RandomProjectionExtractor::extract(
    const Tensor<float>& patch) const {
  if (patch.rank() != 3 || patch.dim(2) != 3 || patch.dim(0) < 3 ||
      patch.dim(1) < 3)
    throw ShapeError("feature extractor: expected [H>=3, W>=3, 3] patch, got " +
                     to_string(patch.shape()));
  const std::size_t h = patch.dim(0), w = patch.dim(1);
  std::vector<double> pooled(dim_, 0.0);
  double v[27];
  for (std::size_t r = 1; r + 1 < h; ++r)
    for (std::size_t c = 1; c + 1 < w; ++c) {
      std::size_t k = 0;
      for (std::size_t dr = 0; dr < 3; ++dr)
        for (std::size_t dc = 0; dc < 3; ++dc)
          for (std::size_t ch = 0; ch < 3; ++ch)
            v[k++] = 2.0 * patch[((r + dr - 1) * w + c + dc - 1) * 3 + ch] - 1.0;
      for (std::size_t o = 0; o < dim_; ++o) {
        double acc = bias_[o];
        const double* wr = weight_.data() + o * 27;
        for (std::size_t i = 0; i < 27; ++i) acc += wr[i] * v[i];
        pooled[o] += std::tanh(acc);
      }
    }
  const double count = static_cast<double>((h - 2) * (w - 2));
  for (double& p : pooled) p /= count;
  return pooled;
}

FeatureSet extract_all(const FeatureExtractor& fx,
                       const std::vector<Tensor<float>>& frames,
                       const PatchSpec& spec) {
  FeatureSet out;
  out.d = fx.dim();
  for (const auto& frame : frames)
    for (const auto& patch : patch_split(frame, spec)) out.append(fx.extract(patch));
  return out;
}

}  // namespace vdb::metrics
