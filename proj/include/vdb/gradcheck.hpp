// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "vdb/autograd.hpp"

namespace vdb {

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
  std::size_t coords_checked = 0;
};

using ScalarFn = std::function<Var<double>(const Var<double>&)>;

/// Compares reverse-mode gradients of the scalar f at x against central
/// differences with the given step. Per coordinate the error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8); the maximum is
/// reported. `max_coords` > 0 checks a seeded random subset of coordinates.
/// Throws NumericalError if f is non-finite anywhere it is evaluated.
FdReport fd_check(const ScalarFn& f, const Tensor<double>& x, double step,
                  std::size_t max_coords = 0, std::uint64_t seed = 0);

}  // namespace vdb
