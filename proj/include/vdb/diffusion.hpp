// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Gaussian diffusion with a linear beta schedule, epsilon-prediction loss and
// two samplers: ancestral DDPM (posterior variance) and deterministic DDIM
// (eta = 0). Timesteps are 1-based; alpha_bar(0) = 1.
//
// Images enter and leave in [0, 1]; the chain runs in [-1, 1].

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vdb/autograd.hpp"
#include "vdb/rng.hpp"

namespace vdb::unet {
template <class T>
class UNet;
}

namespace vdb::diffusion {

class Schedule {
 public:
  /// beta_t linear from beta_1 to beta_T.
  static Schedule linear(std::size_t steps = 1000, double beta_1 = 1e-6,
                         double beta_T = 1e-2);

  std::size_t steps() const { return beta_.size(); }
  double beta(std::size_t t) const;       // t in [1, T]
  double alpha(std::size_t t) const;      // 1 - beta(t)
  double alpha_bar(std::size_t t) const;  // t in [0, T]
  /// beta(t) (1 - alpha_bar(t-1)) / (1 - alpha_bar(t)).
  double posterior_variance(std::size_t t) const;

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;  // index 0 holds 1
};

/// [0, 1] -> [-1, 1] and back (the inverse clamps to [0, 1]).
template <class T>
Tensor<T> to_model_range(const Tensor<T>& image);
template <class T>
Tensor<T> from_model_range(const Tensor<T>& x);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, for a single t.
template <class T>
Tensor<T> q_sample(const Tensor<T>& x0, std::size_t t, const Tensor<T>& eps,
                   const Schedule& s);

/// Per-item timesteps for a batch [B, ...].
template <class T>
Tensor<T> q_sample(const Tensor<T>& x0, const std::vector<std::size_t>& t,
                   const Tensor<T>& eps, const Schedule& s);

/// The random part of one loss evaluation, so it can be replayed.
template <class T>
struct LossDraw {
  std::vector<std::size_t> t;  // one per batch item, uniform on [1, T]
  Tensor<T> eps;               // standard normal, shape of x0
};

template <class T>
LossDraw<T> draw_loss(const Shape& x0_shape, const Schedule& s, Rng& rng);

/// mean((eps - eps_hat)^2) for blurry y and sharp x0, both [B, F, H, W, 3]
/// in [0, 1].
template <class T>
Var<T> training_loss(const unet::UNet<T>& net, const Tensor<T>& y,
                     const Tensor<T>& x0, const Schedule& s, Rng& rng);
template <class T>
Var<T> training_loss(const unet::UNet<T>& net, const Tensor<T>& y,
                     const Tensor<T>& x0, const Schedule& s,
                     const LossDraw<T>& draw);

/// eps_hat(x_t, y, t), inputs in model range.
template <class T>
using Denoiser =
    std::function<Tensor<T>(const Tensor<T>& x_t, const Tensor<T>& y,
                            std::size_t t)>;

template <class T>
Denoiser<T> denoiser_of(const unet::UNet<T>& net);

enum class SamplerKind { kDdpm, kDdim };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kDdim;
  std::size_t ddim_steps = 50;
  std::uint64_t seed = 0;
  /// Clamp the x0 estimate to [-1, 1] at every step.
  bool clip_denoised = true;
};

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler(const std::string& name);

/// i * T / S for i = 1..S (strictly increasing, ends at T).
std::vector<std::size_t> ddim_timesteps(std::size_t steps, std::size_t count);

/// Restoration of blurry y ([0, 1]); returns an image in [0, 1]. The initial
/// noise and every ancestral draw come from Rng(cfg.seed).
template <class T>
Tensor<T> sample_ddpm(const Denoiser<T>& eps, const Tensor<T>& y,
                      const Schedule& s, const SamplerConfig& cfg);
template <class T>
Tensor<T> sample_ddim(const Denoiser<T>& eps, const Tensor<T>& y,
                      const Schedule& s, const SamplerConfig& cfg);
/// Dispatches on cfg.kind.
template <class T>
Tensor<T> sample(const Denoiser<T>& eps, const Tensor<T>& y, const Schedule& s,
                 const SamplerConfig& cfg);

/// Pixel-wise mean of samples.
template <class T>
Tensor<T> mean_of(const std::vector<Tensor<T>>& samples);

/// SA-x: mean of one sample per seed. Constituent samples are appended to
/// `samples_out` when given.
template <class T>
Tensor<T> sample_average(const Denoiser<T>& eps, const Tensor<T>& y,
                         const Schedule& s, SamplerConfig cfg,
                         const std::vector<std::uint64_t>& seeds,
                         std::vector<Tensor<T>>* samples_out = nullptr);

}  // namespace vdb::diffusion
