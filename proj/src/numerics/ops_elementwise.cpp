// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "vdb/kernels.hpp"
#include "vdb/ops.hpp"

namespace vdb::ops {

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  kernels::axpy<T>(T(1), b.value().data(), out.data());
  return record<T>("add", std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t i = 0; i < 2; ++i)
      if (auto g = parent_grad(self, i); !g.empty())
        kernels::axpy<T>(T(1), std::span<const T>(self.grad), g);
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  kernels::axpy<T>(T(-1), b.value().data(), out.data());
  return record<T>("sub", std::move(out), {a, b}, [](Node<T>& self) {
    if (auto g = parent_grad(self, 0); !g.empty())
      kernels::axpy<T>(T(1), std::span<const T>(self.grad), g);
    if (auto g = parent_grad(self, 1); !g.empty())
      kernels::axpy<T>(T(-1), std::span<const T>(self.grad), g);
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  const T* pa = a.value().ptr();
  const T* pb = b.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
  return record<T>("mul", std::move(out), {a, b}, [](Node<T>& self) {
    const T* pa = self.parents[0]->value.ptr();
    const T* pb = self.parents[1]->value.ptr();
    if (auto g = parent_grad(self, 0); !g.empty())
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb[i];
    if (auto g = parent_grad(self, 1); !g.empty())
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa[i];
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out = a.value();
  kernels::scal<T>(s, out.data());
  return record<T>("scale", std::move(out), {a}, [s](Node<T>& self) {
    if (auto g = parent_grad(self, 0); !g.empty())
      kernels::axpy<T>(s, std::span<const T>(self.grad), g);
  });
}

template <class T>
Var<T> swish(const Var<T>& x) {
  Tensor<T> out(x.shape());
  const T* px = x.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = px[i] / (T(1) + std::exp(-px[i]));
  return record<T>("swish", std::move(out), {x}, [](Node<T>& self) {
    auto g = parent_grad(self, 0);
    if (g.empty()) return;
    const T* px = self.parents[0]->value.ptr();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T s = T(1) / (T(1) + std::exp(-px[i]));
      g[i] += self.grad[i] * s * (T(1) + px[i] * (T(1) - s));
    }
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().data()) acc += v;
  return record<T>("sum", Tensor<T>::scalar(static_cast<T>(acc)), {x},
                   [](Node<T>& self) {
                     auto g = parent_grad(self, 0);
                     for (auto& v : g) v += self.grad[0];
                   });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  const std::size_t n = x.size();
  double acc = 0.0;
  for (T v : x.value().data()) acc += v;
  return record<T>("mean", Tensor<T>::scalar(static_cast<T>(acc / n)), {x},
                   [n](Node<T>& self) {
                     auto g = parent_grad(self, 0);
                     const T d = self.grad[0] / static_cast<T>(n);
                     for (auto& v : g) v += d;
                   });
}

template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  const std::size_t n = a.size();
  const T* pa = a.value().ptr();
  const T* pb = b.value().ptr();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    acc += d * d;
  }
  return record<T>(
      "mse", Tensor<T>::scalar(static_cast<T>(acc / n)), {a, b},
      [n](Node<T>& self) {
        const T* pa = self.parents[0]->value.ptr();
        const T* pb = self.parents[1]->value.ptr();
        const T c = T(2) * self.grad[0] / static_cast<T>(n);
        if (auto g = parent_grad(self, 0); !g.empty())
          for (std::size_t i = 0; i < n; ++i) g[i] += c * (pa[i] - pb[i]);
        if (auto g = parent_grad(self, 1); !g.empty())
          for (std::size_t i = 0; i < n; ++i) g[i] -= c * (pa[i] - pb[i]);
      });
}

template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w) {
  require_same_shape(x.shape(), w.shape(), "weighted_sum");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += static_cast<double>(x.value()[i]) * w[i];
  return record<T>("weighted_sum", Tensor<T>::scalar(static_cast<T>(acc)),
                   {x}, [w](Node<T>& self) {
                     if (auto g = parent_grad(self, 0); !g.empty())
                       kernels::axpy<T>(self.grad[0], w.data(), g);
                   });
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (numel(shape) != x.size())
    throw ShapeError("reshape " + to_string(x.shape()) + " -> " +
                     to_string(shape));
  return record<T>("reshape", x.value().reshaped(std::move(shape)), {x},
                   [](Node<T>& self) {
                     if (auto g = parent_grad(self, 0); !g.empty())
                       kernels::axpy<T>(T(1), std::span<const T>(self.grad),
                                        g);
                   });
}

template <class T>
Var<T> concat_last(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || sa.empty() ||
      !std::equal(sa.begin(), sa.end() - 1, sb.begin()))
    throw ShapeError("concat_last: " + to_string(sa) + " vs " + to_string(sb));
  const std::size_t ca = sa.back();
  const std::size_t cb = sb.back();
  const std::size_t rows = a.size() / ca;
  Shape so = sa;
  so.back() = ca + cb;
  Tensor<T> out(so);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().ptr() + r * ca, ca, out.ptr() + r * (ca + cb));
    std::copy_n(b.value().ptr() + r * cb, cb, out.ptr() + r * (ca + cb) + ca);
  }
  return record<T>("concat_last", std::move(out), {a, b},
                   [rows, ca, cb](Node<T>& self) {
                     const std::size_t c = ca + cb;
                     if (auto g = parent_grad(self, 0); !g.empty())
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < ca; ++j)
                           g[r * ca + j] += self.grad[r * c + j];
                     if (auto g = parent_grad(self, 1); !g.empty())
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < cb; ++j)
                           g[r * cb + j] += self.grad[r * c + ca + j];
                   });
}

template <class T>
Var<T> broadcast_add(const Var<T>& x, const Var<T>& y, BroadcastDims d) {
  if (x.size() != d.outer * d.groups * d.inner * d.channels ||
      y.size() != d.groups * d.channels)
    throw ShapeError("broadcast_add: " + to_string(x.shape()) + " + " +
                     to_string(y.shape()) + " does not fit the broadcast");
  Tensor<T> out = x.value();
  const T* py = y.value().ptr();
  T* po = out.ptr();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t g = 0; g < d.groups; ++g)
      for (std::size_t i = 0; i < d.inner; ++i) {
        T* row = po + ((o * d.groups + g) * d.inner + i) * d.channels;
        const T* yr = py + g * d.channels;
        for (std::size_t c = 0; c < d.channels; ++c) row[c] += yr[c];
      }
  return record<T>("broadcast_add", std::move(out), {x, y}, [d](Node<T>& self) {
    if (auto g = parent_grad(self, 0); !g.empty())
      kernels::axpy<T>(T(1), std::span<const T>(self.grad), g);
    if (auto gy = parent_grad(self, 1); !gy.empty()) {
      for (std::size_t o = 0; o < d.outer; ++o)
        for (std::size_t g = 0; g < d.groups; ++g)
          for (std::size_t i = 0; i < d.inner; ++i) {
            const T* row = self.grad.data() +
                           ((o * d.groups + g) * d.inner + i) * d.channels;
            T* yr = gy.data() + g * d.channels;
            for (std::size_t c = 0; c < d.channels; ++c) yr[c] += row[c];
          }
    }
  });
}

template <class T>
const Var<T>& check_finite(const Var<T>& x, std::string_view where) {
  if (!x.value().all_finite())
    throw NumericalError("non-finite values in " + std::string(where));
  return x;
}

#define VDB_INSTANTIATE(T)                                                   \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> scale<T>(const Var<T>&, T);                                \
  template Var<T> swish<T>(const Var<T>&);                                   \
  template Var<T> sum<T>(const Var<T>&);                                     \
  template Var<T> mean<T>(const Var<T>&);                                    \
  template Var<T> mse<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);          \
  template Var<T> reshape<T>(const Var<T>&, Shape);                          \
  template Var<T> concat_last<T>(const Var<T>&, const Var<T>&);              \
  template Var<T> broadcast_add<T>(const Var<T>&, const Var<T>&,             \
                                   BroadcastDims);                           \
  template const Var<T>& check_finite<T>(const Var<T>&, std::string_view);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::ops
