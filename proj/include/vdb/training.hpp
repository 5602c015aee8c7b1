// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Optimisation loop: warmup + cosine learning rate, Adam, global-norm
// clipping, checkpoints and loss traces.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "vdb/data.hpp"
#include "vdb/diffusion.hpp"
#include "vdb/metrics.hpp"
#include "vdb/unet.hpp"

namespace vdb::training {

struct TrainConfig {
  double lr_start = 1e-6;
  double lr_peak = 1e-4;
  std::size_t warmup_steps = 5000;
  std::size_t total_steps = 20000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global norm; 0 disables
  std::size_t batch_size = 2;
  std::size_t crop = 48;
  std::uint64_t seed = 0;
  double beta_start = 1e-6;  // diffusion schedule endpoints
  double beta_end = 1e-2;
};

/// Linear warmup from lr_start to lr_peak, then a half cosine from lr_peak
/// back down to lr_start at total_steps.
double lr_at(std::size_t step, const TrainConfig& cfg);

template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Var<T>>& params, double beta1, double beta2, double eps);

  /// One update of every parameter with its gradient, at learning rate lr.
  void step(std::vector<Var<T>>& params, const std::vector<Tensor<T>>& grads,
            double lr);

  std::size_t steps_taken() const { return t_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  void set_steps_taken(std::size_t t) { t_ = t; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

/// Scales grads in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <class T>
double clip_global_norm(std::vector<Tensor<T>>& grads, double max_norm);

template <class T>
struct TrainState {
  TrainState(const unet::UNetConfig& model, const TrainConfig& train);

  unet::UNet<T> net;
  TrainConfig cfg;
  diffusion::Schedule schedule;
  Adam<T> adam;
  std::size_t step = 0;
  Rng rng;  // drives batches, timesteps and noise, in that order per step
};

struct StepResult {
  double loss = 0;
  double lr = 0;
  double grad_norm = 0;
};

/// One Adam update on `batch` at lr_at(state.step). Throws NumericalError on
/// a non-finite loss or gradient (state is left untouched).
template <class T>
StepResult train_step(TrainState<T>& state, const data::Batch& batch);
/// As above with an explicit noise draw.
template <class T>
StepResult train_step(TrainState<T>& state, const data::Batch& batch,
                      const diffusion::LossDraw<T>& draw);

/// Batch plus loss draw for the next step, both from state.rng.
template <class T>
StepResult train_next(TrainState<T>& state, const data::ClipDataset& ds);

/// Binary checkpoint: a text header followed by named raw blobs.
///
///   vdeblur-checkpoint 1
///   config_hash <16 hex digits>
///   step <n>
///   rng <Rng::serialize()>
///   dtype f32|f64
///   blobs <count>
///   end
///   then per blob: "<name> <element count>\n" and little-endian values.
///
/// Blobs: "config" (UTF-8 text), "param/<name>" for every parameter in
/// ParamSet order, then "adam.m/<name>" and "adam.v/<name>" for trainable
/// parameters.
struct CheckpointHeader {
  std::string config_hash;
  std::size_t step = 0;
  std::string rng;
  std::string dtype;
  std::string config_text;
};

template <class T>
void save_checkpoint(const std::filesystem::path& path, const TrainState<T>& s,
                     const std::string& config_text,
                     const std::string& config_hash);
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);
/// Restores parameters, optimizer moments, step and rng into `s`, whose
/// model must have been built from the same config.
template <class T>
void load_checkpoint(const std::filesystem::path& path, TrainState<T>& s);

/// CSV trace: a comment line with the config hash and seed, then
/// "step,lr,loss,grad_norm" rows.
class LossLog {
 public:
  LossLog(const std::filesystem::path& path, const std::string& config_hash,
          std::uint64_t seed, bool append);
  void write(std::size_t step, const StepResult& r);

 private:
  std::ofstream out_;
};

/// Runs steps until state.step == cfg.total_steps. `on_step` sees every step
/// after it completes.
template <class T>
void train(TrainState<T>& state, const data::ClipDataset& ds,
           const std::function<void(const TrainState<T>&, const StepResult&)>&
               on_step = {});

struct FrameScore {
  std::string clip;
  std::size_t frame;
  double psnr, ssim;            // restored vs sharp
  double blur_psnr, blur_ssim;  // input vs sharp
};

struct MetricReport {
  std::vector<FrameScore> frames;
  double mean_psnr = 0, mean_ssim = 0;
  double mean_blur_psnr = 0, mean_blur_ssim = 0;
  double fid = 0, kid_x1000 = 0;
  std::size_t patches_per_frame = 0, patch_size = 0, feature_count = 0;
  std::string extractor;
};

/// Restores every clip in non-overlapping F-frame chunks (a short tail chunk
/// reuses the last F frames) and scores it against the sharp frames. Frames
/// whose size the network cannot take are reflect-padded and cropped back.
/// `samples_per_chunk` > 1 gives SA-x restorations. The returned clips carry
/// the restoration in `blur` and the reference frames in `sharp`.
template <class T>
data::ClipDataset restore(const unet::UNet<T>& net, const data::ClipDataset& ds,
                          const diffusion::Schedule& schedule,
                          const diffusion::SamplerConfig& sampler,
                          std::size_t samples_per_chunk = 1);

MetricReport score(const data::ClipDataset& restored,
                   const data::ClipDataset& reference,
                   const metrics::PatchSpec& patches,
                   const metrics::FeatureExtractor& fx);

struct AblationVariant {
  std::string name;
  wtsa::AblationFlags flags;
  wtsa::WindowSizes windows = wtsa::kDefaultWindows;
};

/// The module-switch rows: baseline through joint-position.
std::vector<AblationVariant> module_variants();
std::vector<AblationVariant> window_variants();

struct AblationResult {
  AblationVariant variant;
  std::uint64_t seed = 0;
  double final_loss = 0;  // mean over the last `tail` steps
  std::vector<double> losses;
  MetricReport report;
  bool evaluated = false;
};

/// Trains one variant from scratch on `ds` and optionally evaluates it.
AblationResult ablation_run(const AblationVariant& variant,
                            unet::UNetConfig model, TrainConfig train,
                            const data::ClipDataset& ds, std::size_t tail,
                            const diffusion::SamplerConfig* eval_sampler);

}  // namespace vdb::training
