// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Dense arithmetic kernels with a scalar reference implementation and an
// AVX2/FMA implementation. The active instruction set is picked once at
// startup (CPU probe, overridable with VDB_ISA=scalar) and can be switched
// explicitly for equivalence tests. Results of the two paths agree to
// rounding; within one path they are bit-reproducible.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace vdb::kernels {

enum class Isa { kScalar, kAvx2 };

enum class Trans : bool { kNo = false, kYes = true };

bool isa_supported(Isa isa);
Isa active_isa();
/// Throws vdb::UsageError if the CPU lacks `isa`.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa);

/// C = alpha * op(A) * op(B) + beta * C, row-major. op(A) is m x k, op(B) is
/// k x n. beta == 0 overwrites C without reading it.
template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc);

template <class T>
T dot(std::span<const T> x, std::span<const T> y);

/// y += a * x
template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y);

/// x *= a
template <class T>
void scal(T a, std::span<T> x);

// Per-ISA entry points. The dispatching functions above forward to one of
// these; tests call them directly to compare paths.
namespace scalar {
template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc);
template <class T>
T dot(std::span<const T> x, std::span<const T> y);
template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y);
template <class T>
void scal(T a, std::span<T> x);
}  // namespace scalar

namespace avx2 {
template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc);
template <class T>
T dot(std::span<const T> x, std::span<const T> y);
template <class T>
void axpy(T a, std::span<const T> x, std::span<T> y);
template <class T>
void scal(T a, std::span<T> x);
}  // namespace avx2

}  // namespace vdb::kernels
