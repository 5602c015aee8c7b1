// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "vdb/errors.hpp"
#include "vdb/ops.hpp"
#include "vdb/training.hpp"

namespace vdb::training {

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (cfg.warmup_steps >= cfg.total_steps)
    throw UsageError("warmup_steps (" + std::to_string(cfg.warmup_steps) +
                     ") must be below total_steps (" +
                     std::to_string(cfg.total_steps) + ")");
  if (step > cfg.total_steps)
    throw UsageError("step " + std::to_string(step) + " beyond total_steps " +
                     std::to_string(cfg.total_steps));
  const double span = cfg.lr_peak - cfg.lr_start;
  if (step <= cfg.warmup_steps) {
    if (cfg.warmup_steps == 0) return cfg.lr_peak;
    return cfg.lr_start + span * static_cast<double>(step) /
                              static_cast<double>(cfg.warmup_steps);
  }
  const double p = static_cast<double>(step - cfg.warmup_steps) /
                   static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.lr_start + span * 0.5 * (1.0 + std::cos(std::numbers::pi * p));
}

template <class T>
Adam<T>::Adam(const std::vector<Var<T>>& params, double beta1, double beta2,
              double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

template <class T>
void Adam<T>::step(std::vector<Var<T>>& params,
                   const std::vector<Tensor<T>>& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw UsageError("adam: parameter count changed since construction");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& w = params[k].mutable_value();
    const Tensor<T>& g = grads[k];
    require_same_shape(w.shape(), g.shape(), "adam parameter/gradient");
    T* m = m_[k].ptr();
    T* v = v_[k].ptr();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      w[i] -= static_cast<T>(lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
    }
  }
}

template <class T>
double clip_global_norm(std::vector<Tensor<T>>& grads, double max_norm) {
  double sq = 0;
  for (const auto& g : grads)
    for (T v : g.data()) sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto& g : grads)
      for (T& v : g.data()) v *= s;
  }
  return norm;
}

template <class T>
TrainState<T>::TrainState(const unet::UNetConfig& model,
                          const TrainConfig& train)
    : net(model, train.seed),
      cfg(train),
      schedule(diffusion::Schedule::linear(model.timesteps, train.beta_start,
                                           train.beta_end)),
      adam(net.trainable_parameters(), train.beta1, train.beta2,
           train.adam_eps),
      rng(train.seed + 1) {
  lr_at(0, cfg);  // validates the schedule
}

namespace {

template <class T>
Tensor<T> as(const Tensor<float>& x) {
  if constexpr (std::is_same_v<T, float>) return x;
  else return x.template cast<T>();
}

}  // namespace

template <class T>
StepResult train_step(TrainState<T>& state, const data::Batch& batch,
                      const diffusion::LossDraw<T>& draw) {
  StepResult r;
  r.lr = lr_at(state.step, state.cfg);
  std::vector<Var<T>> params = state.net.trainable_parameters();
  std::vector<Tensor<T>> grads;
  {
    const Var<T> loss = diffusion::training_loss(
        state.net, as<T>(batch.y), as<T>(batch.x0), state.schedule, draw);
    r.loss = loss.item();
    grads = grad(loss, std::span<const Var<T>>(params));
  }
  for (const auto& g : grads)
    if (!g.all_finite())
      throw NumericalError("non-finite gradient at step " +
                           std::to_string(state.step));
  r.grad_norm = clip_global_norm(grads, state.cfg.grad_clip);
  state.adam.step(params, grads, r.lr);
  ++state.step;
  return r;
}

template <class T>
StepResult train_step(TrainState<T>& state, const data::Batch& batch) {
  const auto draw =
      diffusion::draw_loss<T>(batch.x0.shape(), state.schedule, state.rng);
  return train_step(state, batch, draw);
}

template <class T>
StepResult train_next(TrainState<T>& state, const data::ClipDataset& ds) {
  const data::Batch batch =
      data::load_batch(ds, state.rng, state.cfg.batch_size,
                       state.net.config().frames, state.cfg.crop);
  return train_step(state, batch);
}

template <class T>
void train(TrainState<T>& state, const data::ClipDataset& ds,
           const std::function<void(const TrainState<T>&, const StepResult&)>&
               on_step) {
  while (state.step < state.cfg.total_steps) {
    const StepResult r = train_next(state, ds);
    if (on_step) on_step(state, r);
  }
}

#define VDB_INSTANTIATE(T)                                                   \
  template class Adam<T>;                                                    \
  template struct TrainState<T>;                                             \
  template double clip_global_norm<T>(std::vector<Tensor<T>>&, double);      \
  template StepResult train_step<T>(TrainState<T>&, const data::Batch&);     \
  template StepResult train_step<T>(TrainState<T>&, const data::Batch&,      \
                                    const diffusion::LossDraw<T>&);          \
  template StepResult train_next<T>(TrainState<T>&, const data::ClipDataset&); \
  template void train<T>(                                                    \
      TrainState<T>&, const data::ClipDataset&,                              \
      const std::function<void(const TrainState<T>&, const StepResult&)>&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::training
