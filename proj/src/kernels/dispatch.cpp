// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "vdb/errors.hpp"
#include "vdb/kernels.hpp"

namespace vdb::kernels {
namespace {

bool cpu_has_avx2() {
#ifdef VDB_HAVE_AVX2
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa probe() {
  if (const char* env = std::getenv("VDB_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{probe()};
  return isa;
}

}  // namespace

// Without the AVX2 translation unit every call takes the scalar path.
#ifndef VDB_HAVE_AVX2
namespace avx2 {
using scalar::axpy;
using scalar::dot;
using scalar::gemm;
using scalar::scal;
}  // namespace avx2
#endif

bool isa_supported(Isa isa) {
  return isa == Isa::kScalar || cpu_has_avx2();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa))
    throw UsageError("instruction set not supported on this CPU: " +
                     std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc) {
  if (active_isa() == Isa::kAvx2)
    avx2::gemm<T>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  else
    scalar::gemm<T>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
  return active_isa() == Isa::kAvx2 ? avx2::dot<T>(x, y)
                                    : scalar::dot<T>(x, y);
}

template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y) {
  if (active_isa() == Isa::kAvx2)
    avx2::axpy<T>(a, x, y);
  else
    scalar::axpy<T>(a, x, y);
}

template <class T>
void scal(T a, std::span<T> x) {
  if (active_isa() == Isa::kAvx2)
    avx2::scal<T>(a, x);
  else
    scalar::scal<T>(a, x);
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

}  // namespace vdb::kernels
