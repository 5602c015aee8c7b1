// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/layers.hpp"

#include <cmath>

#include "vdb/ops.hpp"

namespace vdb::nn {

template <class T>
Var<T> ParamSet<T>::add(std::string name, Tensor<T> init, ParamKind kind) {
  for (const auto& p : items_)
    if (p.name == name) throw UsageError("duplicate parameter name " + name);
  Var<T> v = Var<T>::parameter(std::move(init));
  items_.push_back({std::move(name), v, kind});
  return v;
}

template <class T>
std::vector<Var<T>> ParamSet<T>::vars() const {
  std::vector<Var<T>> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.var);
  return out;
}

template <class T>
std::size_t ParamSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.size();
  return n;
}

template <class T>
const Var<T>& ParamSet<T>::at(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return p.var;
  throw UsageError("no parameter named " + name);
}

template <class T>
Tensor<T> fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <class T>
Linear<T> Linear<T>::make(ParamSet<T>& ps, const std::string& name,
                          std::size_t in, std::size_t out, Rng& rng,
                          ParamKind kind) {
  Linear l;
  l.weight = ps.add(name + ".w", fan_in_uniform<T>({in, out}, in, rng), kind);
  l.bias = ps.add(name + ".b", fan_in_uniform<T>({out}, in, rng), kind);
  return l;
}

template <class T>
Var<T> Linear<T>::operator()(const Var<T>& x) const {
  return ops::linear(x, weight, bias);
}

template <class T>
Conv3x3<T> Conv3x3<T>::make(ParamSet<T>& ps, const std::string& name,
                            std::size_t in, std::size_t out, std::size_t stride,
                            Rng& rng, bool zero_init) {
  Conv3x3 c;
  c.stride = stride;
  if (zero_init) {
    c.weight = ps.add(name + ".w", Tensor<T>({9 * in, out}));
    c.bias = ps.add(name + ".b", Tensor<T>({out}));
  } else {
    c.weight = ps.add(name + ".w", fan_in_uniform<T>({9 * in, out}, 9 * in, rng));
    c.bias = ps.add(name + ".b", fan_in_uniform<T>({out}, 9 * in, rng));
  }
  return c;
}

template <class T>
Var<T> Conv3x3<T>::operator()(const Var<T>& x) const {
  const Shape& s = x.shape();
  if (s.size() != 5)
    throw ShapeError("conv: expected [B, F, H, W, C], got " + to_string(s));
  Var<T> y = ops::conv3x3(ops::reshape(x, {s[0] * s[1], s[2], s[3], s[4]}),
                          weight, bias, stride);
  const Shape& so = y.shape();
  return ops::reshape(y, {s[0], s[1], so[1], so[2], so[3]});
}

template <class T>
Norm<T> Norm<T>::make(ParamSet<T>& ps, const std::string& name,
                      std::size_t channels, ParamKind kind) {
  Norm n;
  n.gamma = ps.add(name + ".gamma", Tensor<T>::full({channels}, T(1)), kind);
  n.beta = ps.add(name + ".beta", Tensor<T>({channels}), kind);
  return n;
}

template <class T>
Var<T> group_norm_frames(const Var<T>& x, std::size_t groups,
                         const Norm<T>& norm) {
  const Shape& s = x.shape();
  if (s.size() != 5)
    throw ShapeError("group norm: expected [B, F, H, W, C], got " +
                     to_string(s));
  Var<T> y = ops::group_norm(ops::reshape(x, {s[0] * s[1], s[2], s[3], s[4]}),
                             groups, norm.gamma, norm.beta);
  return ops::reshape(y, s);
}

#define VDB_INSTANTIATE(T)                                              \
  template class ParamSet<T>;                                           \
  template struct Linear<T>;                                            \
  template struct Conv3x3<T>;                                           \
  template struct Norm<T>;                                              \
  template Tensor<T> fan_in_uniform<T>(Shape, std::size_t, Rng&);       \
  template Var<T> group_norm_frames<T>(const Var<T>&, std::size_t,      \
                                       const Norm<T>&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::nn
