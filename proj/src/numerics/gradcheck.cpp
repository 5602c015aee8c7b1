// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vdb/rng.hpp"

namespace vdb {
namespace {

double eval(const ScalarFn& f, const Tensor<double>& x) {
  NoGradGuard no_grad;
  const double v = f(Var<double>(x)).item();
  if (!std::isfinite(v)) throw NumericalError("fd_check: f is not finite");
  return v;
}

}  // namespace

FdReport fd_check(const ScalarFn& f, const Tensor<double>& x, double step,
                  std::size_t max_coords, std::uint64_t seed) {
  if (!(step > 0.0)) throw UsageError("fd_check: step must be positive");
  const Var<double> input = Var<double>::parameter(x);
  const Var<double> out = f(input);
  if (!std::isfinite(out.item()))
    throw NumericalError("fd_check: f is not finite");
  const std::vector<Var<double>> params{input};
  const Tensor<double> analytic =
      grad<double>(out, params, Unreachable::kZero).front();

  std::vector<std::size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (max_coords > 0 && max_coords < coords.size()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_coords; ++i)
      std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    coords.resize(max_coords);
    std::sort(coords.begin(), coords.end());
  }

  FdReport report;
  Tensor<double> probe = x;
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = eval(f, probe);
    probe[i] = orig - step;
    const double fm = eval(f, probe);
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    if (err > report.max_rel_error || report.coords_checked == 0) {
      report.max_rel_error = err;
      report.worst_index = i;
      report.analytic = a;
      report.numeric = numeric;
    }
    ++report.coords_checked;
  }
  return report;
}

}  // namespace vdb
