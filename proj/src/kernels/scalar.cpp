// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Straight loops, no blocking; the AVX2 path is tested
// against these.

#include <cassert>

#include "vdb/kernels.hpp"

namespace vdb::kernels::scalar {

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (alpha == T(0) || k == 0) return;

  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip =
          alpha * (ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i]);
      if (tb == Trans::kNo) {
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * b[j * ldb + p];
      }
    }
  }
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
  assert(x.size() == y.size());
  T acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

template <class T>
void scal(T a, std::span<T> x) {
  for (auto& v : x) v *= a;
}

#define VDB_INSTANTIATE(T)                                                   \
  template void gemm<T>(Trans, Trans, std::size_t, std::size_t, std::size_t, \
                        T, const T*, std::size_t, const T*, std::size_t, T,  \
                        T*, std::size_t);                                    \
  template T dot<T>(std::span<const T>, std::span<const T>);                 \
  template void axpy<T>(T, std::span<const T>, std::span<T>);                \
  template void scal<T>(T, std::span<T>);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::kernels::scalar
