// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.
//
// gemm follows the usual packed-panel layout: op(B) is packed into NR-wide
// column strips, op(A) into MR-tall row strips, and a 6 x NR register tile is
// accumulated over each KC-deep slice.

#include <immintrin.h>

#include <algorithm>
#include <cassert>
#include <vector>

#include "vdb/kernels.hpp"

namespace vdb::kernels::avx2 {
namespace {

template <class T>
struct Lane;

template <>
struct Lane<float> {
  using Reg = __m256;
  static constexpr std::size_t kWidth = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg splat(float x) { return _mm256_set1_ps(x); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static float hsum(Reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, lo);
    return _mm_cvtss_f32(_mm_add_ss(lo, sh));
  }
};

template <>
struct Lane<double> {
  using Reg = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg splat(double x) { return _mm256_set1_pd(x); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static double hsum(Reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
  }
};

constexpr std::size_t kMr = 6;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 120;
constexpr std::size_t kNc = 3072;

template <class T>
constexpr std::size_t kNr = 2 * Lane<T>::kWidth;

template <class T>
void pack_a(Trans ta, const T* a, std::size_t lda, std::size_t i0,
            std::size_t mc, std::size_t p0, std::size_t kc, T* out) {
  for (std::size_t s = 0; s < mc; s += kMr) {
    const std::size_t rows = std::min(kMr, mc - s);
    T* strip = out + s * kc;
    if (ta == Trans::kNo) {
      for (std::size_t r = 0; r < rows; ++r) {
        const T* src = a + (i0 + s + r) * lda + p0;
        for (std::size_t p = 0; p < kc; ++p) strip[p * kMr + r] = src[p];
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = a + (p0 + p) * lda + i0 + s;
        for (std::size_t r = 0; r < rows; ++r) strip[p * kMr + r] = src[r];
      }
    }
    for (std::size_t r = rows; r < kMr; ++r)
      for (std::size_t p = 0; p < kc; ++p) strip[p * kMr + r] = T(0);
  }
}

template <class T>
void pack_b(Trans tb, const T* b, std::size_t ldb, std::size_t p0,
            std::size_t kc, std::size_t j0, std::size_t nc, T* out) {
  constexpr std::size_t nr = kNr<T>;
  for (std::size_t s = 0; s < nc; s += nr) {
    const std::size_t cols = std::min(nr, nc - s);
    T* strip = out + s * kc;
    if (tb == Trans::kNo) {
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = b + (p0 + p) * ldb + j0 + s;
        T* dst = strip + p * nr;
        for (std::size_t c = 0; c < cols; ++c) dst[c] = src[c];
        for (std::size_t c = cols; c < nr; ++c) dst[c] = T(0);
      }
    } else {
      for (std::size_t c = 0; c < cols; ++c) {
        const T* src = b + (j0 + s + c) * ldb + p0;
        for (std::size_t p = 0; p < kc; ++p) strip[p * nr + c] = src[p];
      }
      for (std::size_t c = cols; c < nr; ++c)
        for (std::size_t p = 0; p < kc; ++p) strip[p * nr + c] = T(0);
    }
  }
}

template <class T>
void micro_kernel(std::size_t kc, const T* pa, const T* pb, T alpha, T* c,
                  std::size_t ldc, std::size_t rows, std::size_t cols) {
  using L = Lane<T>;
  constexpr std::size_t w = L::kWidth;
  constexpr std::size_t nr = kNr<T>;

  typename L::Reg c00 = L::zero(), c01 = L::zero();
  typename L::Reg c10 = L::zero(), c11 = L::zero();
  typename L::Reg c20 = L::zero(), c21 = L::zero();
  typename L::Reg c30 = L::zero(), c31 = L::zero();
  typename L::Reg c40 = L::zero(), c41 = L::zero();
  typename L::Reg c50 = L::zero(), c51 = L::zero();

  for (std::size_t p = 0; p < kc; ++p) {
    const typename L::Reg b0 = L::load(pb);
    const typename L::Reg b1 = L::load(pb + w);
    typename L::Reg av = L::splat(pa[0]);
    c00 = L::fma(av, b0, c00);
    c01 = L::fma(av, b1, c01);
    av = L::splat(pa[1]);
    c10 = L::fma(av, b0, c10);
    c11 = L::fma(av, b1, c11);
    av = L::splat(pa[2]);
    c20 = L::fma(av, b0, c20);
    c21 = L::fma(av, b1, c21);
    av = L::splat(pa[3]);
    c30 = L::fma(av, b0, c30);
    c31 = L::fma(av, b1, c31);
    av = L::splat(pa[4]);
    c40 = L::fma(av, b0, c40);
    c41 = L::fma(av, b1, c41);
    av = L::splat(pa[5]);
    c50 = L::fma(av, b0, c50);
    c51 = L::fma(av, b1, c51);
    pa += kMr;
    pb += nr;
  }

  const typename L::Reg acc[kMr][2] = {{c00, c01}, {c10, c11}, {c20, c21},
                                       {c30, c31}, {c40, c41}, {c50, c51}};
  const typename L::Reg va = L::splat(alpha);
  if (rows == kMr && cols == nr) {
    for (std::size_t r = 0; r < kMr; ++r) {
      T* crow = c + r * ldc;
      L::store(crow, L::fma(va, acc[r][0], L::load(crow)));
      L::store(crow + w, L::fma(va, acc[r][1], L::load(crow + w)));
    }
    return;
  }
  alignas(32) T tile[kMr * nr];
  for (std::size_t r = 0; r < kMr; ++r) {
    L::store(tile + r * nr, L::mul(va, acc[r][0]));
    L::store(tile + r * nr + w, L::mul(va, acc[r][1]));
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += tile[r * nr + j];
}

template <class T>
std::vector<T>& scratch_a() {
  thread_local std::vector<T> buf(kMc * kKc);
  return buf;
}

template <class T>
std::vector<T>& scratch_b() {
  thread_local std::vector<T> buf(kKc * kNc);
  return buf;
}

}  // namespace

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      scal<T>(beta, std::span<T>(crow, n));
    }
  }
  if (alpha == T(0) || k == 0 || m == 0 || n == 0) return;

  constexpr std::size_t nr = kNr<T>;
  T* pa = scratch_a<T>().data();
  T* pb = scratch_b<T>().data();

  for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
    const std::size_t nc = std::min(kNc, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
      const std::size_t kc = std::min(kKc, k - p0);
      pack_b(tb, b, ldb, p0, kc, j0, nc, pb);
      for (std::size_t i0 = 0; i0 < m; i0 += kMc) {
        const std::size_t mc = std::min(kMc, m - i0);
        pack_a(ta, a, lda, i0, mc, p0, kc, pa);
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t cols = std::min(nr, nc - jr);
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t rows = std::min(kMr, mc - ir);
            micro_kernel(kc, pa + ir * kc, pb + jr * kc, alpha,
                         c + (i0 + ir) * ldc + j0 + jr, ldc, rows, cols);
          }
        }
      }
    }
  }
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
  assert(x.size() == y.size());
  using L = Lane<T>;
  constexpr std::size_t w = L::kWidth;
  const std::size_t n = x.size();
  typename L::Reg a0 = L::zero(), a1 = L::zero(), a2 = L::zero(),
                  a3 = L::zero();
  std::size_t i = 0;
  for (; i + 4 * w <= n; i += 4 * w) {
    a0 = L::fma(L::load(&x[i]), L::load(&y[i]), a0);
    a1 = L::fma(L::load(&x[i + w]), L::load(&y[i + w]), a1);
    a2 = L::fma(L::load(&x[i + 2 * w]), L::load(&y[i + 2 * w]), a2);
    a3 = L::fma(L::load(&x[i + 3 * w]), L::load(&y[i + 3 * w]), a3);
  }
  for (; i + w <= n; i += w) a0 = L::fma(L::load(&x[i]), L::load(&y[i]), a0);
  T acc = L::hsum(L::add(L::add(a0, a1), L::add(a2, a3)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y) {
  assert(x.size() == y.size());
  using L = Lane<T>;
  constexpr std::size_t w = L::kWidth;
  const std::size_t n = x.size();
  const typename L::Reg va = L::splat(a);
  std::size_t i = 0;
  for (; i + w <= n; i += w)
    L::store(&y[i], L::fma(va, L::load(&x[i]), L::load(&y[i])));
  for (; i < n; ++i) y[i] += a * x[i];
}

template <class T>
void scal(T a, std::span<T> x) {
  using L = Lane<T>;
  constexpr std::size_t w = L::kWidth;
  const std::size_t n = x.size();
  const typename L::Reg va = L::splat(a);
  std::size_t i = 0;
  for (; i + w <= n; i += w) L::store(&x[i], L::mul(va, L::load(&x[i])));
  for (; i < n; ++i) x[i] *= a;
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

}  // namespace vdb::kernels::avx2
