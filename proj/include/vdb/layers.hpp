// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vdb/autograd.hpp"
#include "vdb/rng.hpp"

namespace vdb::nn {

/// Which ablation switch owns a parameter.
enum class ParamKind { kCore, kAttention, kFramePE, kRelBias };

template <class T>
struct NamedParam {
  std::string name;
  Var<T> var;
  ParamKind kind = ParamKind::kCore;
};

/// Ordered collection of named parameters. Insertion order is the
/// serialization order of checkpoints.
template <class T>
class ParamSet {
 public:
  Var<T> add(std::string name, Tensor<T> init,
             ParamKind kind = ParamKind::kCore);

  const std::vector<NamedParam<T>>& items() const { return items_; }
  std::vector<Var<T>> vars() const;
  std::size_t element_count() const;
  /// Throws UsageError for unknown names.
  const Var<T>& at(const std::string& name) const;

 private:
  std::vector<NamedParam<T>> items_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class T>
Tensor<T> fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng);

template <class T>
struct Linear {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out]

  static Linear make(ParamSet<T>& ps, const std::string& name, std::size_t in,
                     std::size_t out, Rng& rng,
                     ParamKind kind = ParamKind::kCore);
  Var<T> operator()(const Var<T>& x) const;
};

template <class T>
struct Conv3x3 {
  Var<T> weight;  // [9 * in, out]
  Var<T> bias;    // [out]
  std::size_t stride = 1;

  static Conv3x3 make(ParamSet<T>& ps, const std::string& name, std::size_t in,
                      std::size_t out, std::size_t stride, Rng& rng,
                      bool zero_init = false);
  /// x is [B, F, H, W, C]; frames are convolved independently.
  Var<T> operator()(const Var<T>& x) const;
};

template <class T>
struct Norm {
  Var<T> gamma;
  Var<T> beta;

  static Norm make(ParamSet<T>& ps, const std::string& name,
                   std::size_t channels, ParamKind kind = ParamKind::kCore);
};

/// Group norm over each frame of a [B, F, H, W, C] video.
template <class T>
Var<T> group_norm_frames(const Var<T>& x, std::size_t groups,
                         const Norm<T>& norm);

}  // namespace vdb::nn
