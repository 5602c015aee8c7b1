// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include <cmath>

#include "vdb/autograd.hpp"
#include "vdb/rng.hpp"

namespace vdb::test {

template <class T = double>
Tensor<T> random_tensor(Shape shape, Rng& rng, double sd = 1.0) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, sd));
  return t;
}

template <class T = double>
Tensor<T> uniform_tensor(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  EXPECT_EQ(a.shape(), b.shape());
  double m = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Var<double> param(const Tensor<double>& t) { return Var<double>::parameter(t); }

}  // namespace vdb::test
