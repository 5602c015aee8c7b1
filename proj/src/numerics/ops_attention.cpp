// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "vdb/kernels.hpp"
#include "vdb/ops.hpp"

namespace vdb::ops {

using kernels::Trans;

namespace {

void check_attention_shapes(const Shape& s, const Shape& ks, const Shape* bias,
                            std::size_t heads) {
  if (s.size() != 3) throw ShapeError("attention: q must be [windows, L, C]");
  require_same_shape(s, ks, "attention q/k");
  if (heads == 0 || s[2] % heads != 0)
    throw ShapeError("attention: " + std::to_string(s[2]) +
                     " channels not divisible by " + std::to_string(heads) +
                     " heads");
  if (bias && *bias != Shape{heads, s[1], s[1]})
    throw ShapeError("attention: bias " + to_string(*bias) + ", expected " +
                     to_string(Shape{heads, s[1], s[1]}));
}

// probs[w, h] = softmax(Q_h K_h^T / sqrt(D) + bias[h]) for every window w.
template <class T>
void fill_probs(std::size_t nw, std::size_t len, std::size_t c,
                std::size_t heads, const T* pq, const T* pk, const T* pbias,
                T* probs) {
  const std::size_t d = c / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(d));
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = w * len * c + h * d;
      T* p = probs + (w * heads + h) * len * len;
      kernels::gemm<T>(Trans::kNo, Trans::kYes, len, len, d, sc, pq + off, c,
                       pk + off, c, T(0), p, len);
      for (std::size_t i = 0; i < len; ++i) {
        T* row = p + i * len;
        if (pbias) {
          const T* brow = pbias + (h * len + i) * len;
          for (std::size_t j = 0; j < len; ++j) row[j] += brow[j];
        }
        const T mx = *std::max_element(row, row + len);
        if (!std::isfinite(mx))
          throw NumericalError("attention: non-finite logits");
        T total = 0;
        for (std::size_t j = 0; j < len; ++j) {
          row[j] = std::exp(row[j] - mx);
          total += row[j];
        }
        const T inv = T(1) / total;
        for (std::size_t j = 0; j < len; ++j) row[j] *= inv;
      }
    }
}

}  // namespace

template <class T>
Tensor<T> attention_probs(const Tensor<T>& q, const Tensor<T>& k,
                          const Tensor<T>* bias, std::size_t heads) {
  check_attention_shapes(q.shape(), k.shape(), bias ? &bias->shape() : nullptr,
                         heads);
  const std::size_t nw = q.dim(0), len = q.dim(1), c = q.dim(2);
  Tensor<T> probs({nw, heads, len, len});
  fill_probs(nw, len, c, heads, q.ptr(), k.ptr(), bias ? bias->ptr() : nullptr,
             probs.ptr());
  return probs;
}

template <class T>
Var<T> multihead_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                           const Var<T>& bias, std::size_t heads) {
  const Shape& s = q.shape();
  check_attention_shapes(s, k.shape(), bias.defined() ? &bias.shape() : nullptr,
                         heads);
  require_same_shape(s, v.shape(), "attention q/v");
  const std::size_t nw = s[0], len = s[1], c = s[2];
  const std::size_t d = c / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(d));

  // Softmax weights are kept for the backward pass.
  auto probs = std::make_shared<std::vector<T>>(nw * heads * len * len);
  fill_probs(nw, len, c, heads, q.value().ptr(), k.value().ptr(),
             bias.defined() ? bias.value().ptr() : nullptr, probs->data());
  Tensor<T> out(s);
  const T* pv = v.value().ptr();
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = w * len * c + h * d;
      const T* p = probs->data() + (w * heads + h) * len * len;
      kernels::gemm<T>(Trans::kNo, Trans::kNo, len, d, len, T(1), p, len,
                       pv + off, c, T(0), out.ptr() + off, c);
    }

  std::vector<Var<T>> parents{q, k, v};
  if (bias.defined()) parents.push_back(bias);
  return record<T>(
      "multihead_attention", std::move(out), std::move(parents),
      [nw, len, c, d, heads, sc, probs](Node<T>& self) {
        const T* pq = self.parents[0]->value.ptr();
        const T* pk = self.parents[1]->value.ptr();
        const T* pv = self.parents[2]->value.ptr();
        auto gq = parent_grad(self, 0);
        auto gk = parent_grad(self, 1);
        auto gv = parent_grad(self, 2);
        std::span<T> gb;
        if (self.parents.size() > 3) gb = parent_grad(self, 3);
        std::vector<T> ds(len * len);
        for (std::size_t w = 0; w < nw; ++w)
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = w * len * c + h * d;
            const T* p = probs->data() + (w * heads + h) * len * len;
            const T* go = self.grad.data() + off;
            if (!gv.empty())
              kernels::gemm<T>(Trans::kYes, Trans::kNo, len, d, len, T(1), p,
                               len, go, c, T(1), gv.data() + off, c);
            if (gq.empty() && gk.empty() && gb.empty()) continue;
            // dP = dO V^T, then dS = P * (dP - rowsum(dP * P)).
            kernels::gemm<T>(Trans::kNo, Trans::kYes, len, len, d, T(1), go, c,
                             pv + off, c, T(0), ds.data(), len);
            for (std::size_t i = 0; i < len; ++i) {
              T* row = ds.data() + i * len;
              const T* prow = p + i * len;
              T dotp = 0;
              for (std::size_t j = 0; j < len; ++j) dotp += row[j] * prow[j];
              for (std::size_t j = 0; j < len; ++j)
                row[j] = prow[j] * (row[j] - dotp);
            }
            if (!gb.empty())
              kernels::axpy<T>(T(1), std::span<const T>(ds),
                               gb.subspan(h * len * len, len * len));
            if (!gq.empty())
              kernels::gemm<T>(Trans::kNo, Trans::kNo, len, d, len, sc,
                               ds.data(), len, pk + off, c, T(1),
                               gq.data() + off, c);
            if (!gk.empty())
              kernels::gemm<T>(Trans::kYes, Trans::kNo, len, d, len, sc,
                               ds.data(), len, pq + off, c, T(1),
                               gk.data() + off, c);
          }
      });
}

#define VDB_INSTANTIATE(T)                                                   \
  template Tensor<T> attention_probs<T>(const Tensor<T>&, const Tensor<T>&,  \
                                        const Tensor<T>*, std::size_t);      \
  template Var<T> multihead_attention<T>(const Var<T>&, const Var<T>&,       \
                                         const Var<T>&, const Var<T>&,       \
                                         std::size_t);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::ops
