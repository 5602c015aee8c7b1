// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "vdb/ops.hpp"
#include "vdb/unet.hpp"

namespace vdb::diffusion {

Schedule Schedule::linear(std::size_t steps, double beta_1, double beta_T) {
  if (steps == 0) throw UsageError("schedule: at least one step is required");
  if (!(beta_1 > 0 && beta_T < 1 && beta_1 <= beta_T))
    throw UsageError("schedule: need 0 < beta_1 <= beta_T < 1");
  Schedule s;
  s.beta_.resize(steps);
  s.alpha_bar_.resize(steps + 1);
  s.alpha_bar_[0] = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta_[i] = beta_1 + (beta_T - beta_1) * frac;
    s.alpha_bar_[i + 1] = s.alpha_bar_[i] * (1.0 - s.beta_[i]);
  }
  return s;
}

namespace {

void check_t(std::size_t t, std::size_t lo, std::size_t hi) {
  if (t < lo || t > hi)
    throw UsageError("timestep " + std::to_string(t) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace

double Schedule::beta(std::size_t t) const {
  check_t(t, 1, steps());
  return beta_[t - 1];
}

double Schedule::alpha(std::size_t t) const { return 1.0 - beta(t); }

double Schedule::alpha_bar(std::size_t t) const {
  check_t(t, 0, steps());
  return alpha_bar_[t];
}

double Schedule::posterior_variance(std::size_t t) const {
  return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
}

template <class T>
Tensor<T> to_model_range(const Tensor<T>& image) {
  Tensor<T> out = image;
  for (T& v : out.data()) v = T(2) * v - T(1);
  return out;
}

template <class T>
Tensor<T> from_model_range(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.data()) v = std::clamp((v + T(1)) / T(2), T(0), T(1));
  return out;
}

template <class T>
Tensor<T> q_sample(const Tensor<T>& x0, std::size_t t, const Tensor<T>& eps,
                   const Schedule& s) {
  require_same_shape(x0.shape(), eps.shape(), "q_sample x0/eps");
  const T a = static_cast<T>(std::sqrt(s.alpha_bar(t)));
  const T b = static_cast<T>(std::sqrt(1.0 - s.alpha_bar(t)));
  Tensor<T> out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

template <class T>
Tensor<T> q_sample(const Tensor<T>& x0, const std::vector<std::size_t>& t,
                   const Tensor<T>& eps, const Schedule& s) {
  require_same_shape(x0.shape(), eps.shape(), "q_sample x0/eps");
  if (x0.rank() == 0 || x0.dim(0) != t.size())
    throw ShapeError("q_sample: " + std::to_string(t.size()) +
                     " timesteps for shape " + vdb::to_string(x0.shape()));
  const std::size_t per = t.empty() ? 0 : x0.size() / t.size();
  Tensor<T> out(x0.shape());
  for (std::size_t b = 0; b < t.size(); ++b) {
    const T a = static_cast<T>(std::sqrt(s.alpha_bar(t[b])));
    const T c = static_cast<T>(std::sqrt(1.0 - s.alpha_bar(t[b])));
    for (std::size_t i = b * per; i < (b + 1) * per; ++i)
      out[i] = a * x0[i] + c * eps[i];
  }
  return out;
}

template <class T>
LossDraw<T> draw_loss(const Shape& x0_shape, const Schedule& s, Rng& rng) {
  LossDraw<T> d;
  const std::size_t batch = x0_shape.empty() ? 0 : x0_shape[0];
  for (std::size_t b = 0; b < batch; ++b) d.t.push_back(1 + rng.below(s.steps()));
  d.eps = Tensor<T>(x0_shape);
  for (T& v : d.eps.data()) v = static_cast<T>(rng.normal());
  return d;
}

template <class T>
Var<T> training_loss(const unet::UNet<T>& net, const Tensor<T>& y,
                     const Tensor<T>& x0, const Schedule& s, Rng& rng) {
  return training_loss(net, y, x0, s, draw_loss<T>(x0.shape(), s, rng));
}

template <class T>
Var<T> training_loss(const unet::UNet<T>& net, const Tensor<T>& y,
                     const Tensor<T>& x0, const Schedule& s,
                     const LossDraw<T>& draw) {
  require_same_shape(y.shape(), x0.shape(), "training_loss y/x0");
  const Tensor<T> x_t = q_sample(to_model_range(x0), draw.t, draw.eps, s);
  const Var<T> eps_hat =
      net.denoise(Var<T>(x_t), Var<T>(to_model_range(y)), draw.t);
  return ops::check_finite(ops::mse(eps_hat, Var<T>(draw.eps)),
                           "training loss");
}

template <class T>
Denoiser<T> denoiser_of(const unet::UNet<T>& net) {
  return [&net](const Tensor<T>& x_t, const Tensor<T>& y, std::size_t t) {
    return net.denoise(x_t, y, t);
  };
}

std::string to_string(SamplerKind kind) {
  return kind == SamplerKind::kDdpm ? "ddpm" : "ddim";
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "ddpm") return SamplerKind::kDdpm;
  if (name == "ddim") return SamplerKind::kDdim;
  throw UsageError("unknown sampler '" + name + "' (expected ddpm or ddim)");
}

std::vector<std::size_t> ddim_timesteps(std::size_t steps, std::size_t count) {
  if (count == 0 || count > steps)
    throw UsageError("ddim_steps must be in [1, " + std::to_string(steps) +
                     "], got " + std::to_string(count));
  std::vector<std::size_t> ts(count);
  for (std::size_t i = 1; i <= count; ++i) ts[i - 1] = i * steps / count;
  return ts;
}

namespace {

template <class T>
Tensor<T> initial_noise(const Shape& shape, Rng& rng) {
  Tensor<T> x(shape);
  for (T& v : x.data()) v = static_cast<T>(rng.normal());
  return x;
}

template <class T>
void check_step(const Tensor<T>& x, const char* sampler, std::size_t t) {
  if (!x.all_finite())
    throw NumericalError(std::string(sampler) + ": non-finite state at step t=" +
                         std::to_string(t));
}

// x0 estimate from x_t and eps_hat; optionally clipped.
template <class T>
Tensor<T> predict_x0(const Tensor<T>& x, const Tensor<T>& eps, double abar,
                     bool clip) {
  const T a = static_cast<T>(std::sqrt(abar));
  const T b = static_cast<T>(std::sqrt(1.0 - abar));
  Tensor<T> x0(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x0[i] = (x[i] - b * eps[i]) / a;
    if (clip) x0[i] = std::clamp(x0[i], T(-1), T(1));
  }
  return x0;
}

}  // namespace

template <class T>
Tensor<T> sample_ddpm(const Denoiser<T>& eps_fn, const Tensor<T>& y,
                      const Schedule& s, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  const Tensor<T> cond = to_model_range(y);
  Tensor<T> x = initial_noise<T>(y.shape(), rng);
  for (std::size_t t = s.steps(); t >= 1; --t) {
    const Tensor<T> eps = eps_fn(x, cond, t);
    check_step(eps, "ddpm", t);
    const double abar = s.alpha_bar(t), abar_prev = s.alpha_bar(t - 1);
    const Tensor<T> x0 = predict_x0(x, eps, abar, cfg.clip_denoised);
    const T c0 = static_cast<T>(s.beta(t) * std::sqrt(abar_prev) / (1.0 - abar));
    const T ct = static_cast<T>((1.0 - abar_prev) * std::sqrt(s.alpha(t)) /
                                (1.0 - abar));
    const T sd = static_cast<T>(std::sqrt(s.posterior_variance(t)));
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = c0 * x0[i] + ct * x[i];
      if (t > 1) x[i] += sd * static_cast<T>(rng.normal());
    }
    check_step(x, "ddpm", t);
  }
  return from_model_range(x);
}

template <class T>
Tensor<T> sample_ddim(const Denoiser<T>& eps_fn, const Tensor<T>& y,
                      const Schedule& s, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  const Tensor<T> cond = to_model_range(y);
  Tensor<T> x = initial_noise<T>(y.shape(), rng);
  const std::vector<std::size_t> ts = ddim_timesteps(s.steps(), cfg.ddim_steps);
  for (std::size_t k = ts.size(); k-- > 0;) {
    const std::size_t t = ts[k];
    const std::size_t t_prev = k == 0 ? 0 : ts[k - 1];
    Tensor<T> eps = eps_fn(x, cond, t);
    check_step(eps, "ddim", t);
    const double abar = s.alpha_bar(t), abar_prev = s.alpha_bar(t_prev);
    const Tensor<T> x0 = predict_x0(x, eps, abar, cfg.clip_denoised);
    if (cfg.clip_denoised) {
      // Keep eps consistent with the clipped x0.
      const T a = static_cast<T>(std::sqrt(abar));
      const T b = static_cast<T>(std::sqrt(1.0 - abar));
      for (std::size_t i = 0; i < x.size(); ++i) eps[i] = (x[i] - a * x0[i]) / b;
    }
    const T a_prev = static_cast<T>(std::sqrt(abar_prev));
    const T b_prev = static_cast<T>(std::sqrt(1.0 - abar_prev));
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = a_prev * x0[i] + b_prev * eps[i];
    check_step(x, "ddim", t);
  }
  return from_model_range(x);
}

template <class T>
Tensor<T> sample(const Denoiser<T>& eps, const Tensor<T>& y, const Schedule& s,
                 const SamplerConfig& cfg) {
  return cfg.kind == SamplerKind::kDdpm ? sample_ddpm(eps, y, s, cfg)
                                        : sample_ddim(eps, y, s, cfg);
}

template <class T>
Tensor<T> mean_of(const std::vector<Tensor<T>>& samples) {
  if (samples.empty()) throw UsageError("sample average of zero samples");
  Tensor<T> acc = samples[0];
  for (std::size_t k = 1; k < samples.size(); ++k) {
    require_same_shape(acc.shape(), samples[k].shape(), "sample average");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += samples[k][i];
  }
  const T n = static_cast<T>(samples.size());
  for (T& v : acc.data()) v /= n;
  return acc;
}

template <class T>
Tensor<T> sample_average(const Denoiser<T>& eps, const Tensor<T>& y,
                         const Schedule& s, SamplerConfig cfg,
                         const std::vector<std::uint64_t>& seeds,
                         std::vector<Tensor<T>>* samples_out) {
  if (seeds.empty()) throw UsageError("sample average needs at least one seed");
  std::vector<Tensor<T>> samples;
  for (std::uint64_t seed : seeds) {
    if (std::count(seeds.begin(), seeds.end(), seed) > 1)
      throw UsageError("sample average seeds must be distinct");
    cfg.seed = seed;
    samples.push_back(sample(eps, y, s, cfg));
  }
  Tensor<T> avg = mean_of(samples);
  if (samples_out)
    for (auto& smp : samples) samples_out->push_back(std::move(smp));
  return avg;
}

#define VDB_INSTANTIATE(T)                                                    \
  template Tensor<T> to_model_range<T>(const Tensor<T>&);                     \
  template Tensor<T> from_model_range<T>(const Tensor<T>&);                   \
  template Tensor<T> q_sample<T>(const Tensor<T>&, std::size_t,               \
                                 const Tensor<T>&, const Schedule&);          \
  template Tensor<T> q_sample<T>(const Tensor<T>&,                            \
                                 const std::vector<std::size_t>&,             \
                                 const Tensor<T>&, const Schedule&);          \
  template LossDraw<T> draw_loss<T>(const Shape&, const Schedule&, Rng&);     \
  template Var<T> training_loss<T>(const unet::UNet<T>&, const Tensor<T>&,    \
                                   const Tensor<T>&, const Schedule&, Rng&);  \
  template Var<T> training_loss<T>(const unet::UNet<T>&, const Tensor<T>&,    \
                                   const Tensor<T>&, const Schedule&,         \
                                   const LossDraw<T>&);                       \
  template Denoiser<T> denoiser_of<T>(const unet::UNet<T>&);                  \
  template Tensor<T> sample_ddpm<T>(const Denoiser<T>&, const Tensor<T>&,     \
                                    const Schedule&, const SamplerConfig&);   \
  template Tensor<T> sample_ddim<T>(const Denoiser<T>&, const Tensor<T>&,     \
                                    const Schedule&, const SamplerConfig&);   \
  template Tensor<T> sample<T>(const Denoiser<T>&, const Tensor<T>&,          \
                               const Schedule&, const SamplerConfig&);        \
  template Tensor<T> mean_of<T>(const std::vector<Tensor<T>>&);               \
  template Tensor<T> sample_average<T>(                                       \
      const Denoiser<T>&, const Tensor<T>&, const Schedule&, SamplerConfig,   \
      const std::vector<std::uint64_t>&, std::vector<Tensor<T>>*);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::diffusion
