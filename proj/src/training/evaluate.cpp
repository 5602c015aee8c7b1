// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <numeric>

#include "vdb/errors.hpp"
#include "vdb/training.hpp"
#include "vdb/windowing.hpp"

namespace vdb::training {

LossLog::LossLog(const std::filesystem::path& path,
                 const std::string& config_hash, std::uint64_t seed,
                 bool append) {
  const bool fresh = !append || !std::filesystem::exists(path);
  out_.open(path, fresh ? std::ios::trunc : std::ios::app);
  if (!out_) throw UsageError("cannot write loss trace " + path.string());
  if (fresh)
    out_ << "# config_hash=" << config_hash << " seed=" << seed << "\n"
         << "step,lr,loss,grad_norm\n";
}

void LossLog::write(std::size_t step, const StepResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", step, r.lr, r.loss,
                r.grad_norm);
  out_ << buf;
  out_.flush();
}

namespace {

// Spatial size multiple every stage and window accepts.
std::size_t size_multiple(const unet::UNetConfig& cfg) {
  std::size_t m = 1;
  for (std::size_t w : cfg.window_sizes) m = std::lcm(m, w);
  return m << (cfg.stage_channels.size() - 1);
}

Tensor<float> frame_range(const data::Frames& frames, std::size_t start,
                          std::size_t count) {
  const std::size_t per = frames.size() / frames.dim(0);
  Tensor<float> out({count, frames.dim(1), frames.dim(2), frames.dim(3)});
  std::copy(frames.ptr() + start * per, frames.ptr() + (start + count) * per,
            out.ptr());
  return out;
}

Tensor<float> frame_at(const data::Frames& frames, std::size_t i) {
  return frame_range(frames, i, 1).reshaped(
      {frames.dim(1), frames.dim(2), frames.dim(3)});
}

}  // namespace

template <class T>
data::ClipDataset restore(const unet::UNet<T>& net, const data::ClipDataset& ds,
                          const diffusion::Schedule& schedule,
                          const diffusion::SamplerConfig& sampler,
                          std::size_t samples_per_chunk) {
  if (samples_per_chunk == 0) throw UsageError("restore: need at least one sample");
  const std::size_t f = net.config().frames;
  const std::size_t mult = size_multiple(net.config());
  const auto eps = diffusion::denoiser_of(net);
  std::vector<std::uint64_t> seeds(samples_per_chunk);
  std::iota(seeds.begin(), seeds.end(), sampler.seed);

  std::vector<data::Clip> out;
  for (const data::Clip& clip : ds.clips()) {
    const std::size_t n = clip.blur.dim(0), h = clip.blur.dim(1),
                      w = clip.blur.dim(2);
    if (n < f)
      throw UsageError("clip " + clip.name + " has fewer than " +
                       std::to_string(f) + " frames");
    const std::size_t ph = windowing::round_up(h, mult);
    const std::size_t pw = windowing::round_up(w, mult);
    data::Clip r{clip.name, clip.sharp, data::Frames(clip.blur.shape())};
    const std::size_t per = h * w * 3;
    for (std::size_t done = 0; done < n;) {
      const std::size_t start = std::min(done, n - f);
      Tensor<T> y = frame_range(clip.blur, start, f).template cast<T>();
      if (ph != h || pw != w) y = windowing::reflect_pad(y, ph, pw);
      Tensor<T> x = diffusion::sample_average(eps, y, schedule, sampler, seeds);
      if (ph != h || pw != w) x = windowing::crop(x, h, w);
      const Tensor<float> xf = x.template cast<float>();
      std::copy(xf.ptr() + (done - start) * per, xf.ptr() + f * per,
                r.blur.ptr() + done * per);
      done = start + f;
    }
    out.push_back(std::move(r));
  }
  // `blur` of each returned clip holds the restoration.
  return data::ClipDataset(std::move(out));
}

MetricReport score(const data::ClipDataset& restored,
                   const data::ClipDataset& reference,
                   const metrics::PatchSpec& patches,
                   const metrics::FeatureExtractor& fx) {
  if (restored.size() != reference.size())
    throw UsageError("score: clip counts differ");
  MetricReport rep;
  std::vector<Tensor<float>> out_frames, ref_frames;
  for (std::size_t c = 0; c < reference.size(); ++c) {
    const data::Clip& ref = reference.clips()[c];
    const data::Clip& res = restored.clips()[c];
    require_same_shape(ref.sharp.shape(), res.blur.shape(), "score frames");
    for (std::size_t i = 0; i < ref.sharp.dim(0); ++i) {
      const Tensor<float> gt = frame_at(ref.sharp, i);
      const Tensor<float> est = frame_at(res.blur, i);
      const Tensor<float> in = frame_at(ref.blur, i);
      rep.frames.push_back({ref.name, i, metrics::psnr(est, gt),
                            metrics::ssim(est, gt), metrics::psnr(in, gt),
                            metrics::ssim(in, gt)});
      out_frames.push_back(est);
      ref_frames.push_back(gt);
    }
  }
  if (rep.frames.empty()) throw UsageError("score: no frames");
  const double n = static_cast<double>(rep.frames.size());
  for (const FrameScore& s : rep.frames) {
    rep.mean_psnr += s.psnr / n;
    rep.mean_ssim += s.ssim / n;
    rep.mean_blur_psnr += s.blur_psnr / n;
    rep.mean_blur_ssim += s.blur_ssim / n;
  }
  const metrics::FeatureSet fa = metrics::extract_all(fx, out_frames, patches);
  const metrics::FeatureSet fb = metrics::extract_all(fx, ref_frames, patches);
  rep.fid = metrics::fid(fa, fb);
  rep.kid_x1000 = metrics::kid_x1000(metrics::kid(fa, fb));
  rep.patches_per_frame = metrics::patch_count(ref_frames[0].dim(0),
                                               ref_frames[0].dim(1), patches);
  rep.patch_size = patches.size;
  rep.feature_count = fa.n;
  rep.extractor = fx.name();
  return rep;
}

std::vector<AblationVariant> module_variants() {
  return {
      {"baseline", {false, false, false}},
      {"only-window", {true, false, false}},
      {"relative-position", {true, false, true}},
      {"frame-position", {true, true, false}},
      {"joint-position", {true, true, true}},
  };
}

std::vector<AblationVariant> window_variants() {
  const wtsa::AblationFlags joint{true, true, true};
  return {
      {"win-1111", joint, {1, 1, 1, 1}},
      {"win-3211", joint, {3, 2, 1, 1}},
      {"win-4321", joint, {4, 3, 2, 1}},
      {"win-6432", joint, {6, 4, 3, 2}},
  };
}

AblationResult ablation_run(const AblationVariant& variant,
                            unet::UNetConfig model, TrainConfig train,
                            const data::ClipDataset& ds, std::size_t tail,
                            const diffusion::SamplerConfig* eval_sampler) {
  model.flags = variant.flags;
  model.window_sizes = variant.windows;
  TrainState<float> state(model, train);
  AblationResult res;
  res.variant = variant;
  res.seed = train.seed;
  training::train<float>(state, ds, [&](const TrainState<float>&,
                                        const StepResult& r) {
    res.losses.push_back(r.loss);
  });
  const std::size_t k = std::min(std::max<std::size_t>(tail, 1), res.losses.size());
  if (k > 0)
    res.final_loss =
        std::accumulate(res.losses.end() - static_cast<std::ptrdiff_t>(k),
                        res.losses.end(), 0.0) /
        static_cast<double>(k);
  if (eval_sampler) {
    const auto restored = restore(state.net, ds, state.schedule, *eval_sampler);
    const metrics::RandomProjectionExtractor fx;
    res.report = score(restored, ds, metrics::PatchSpec{16, 0}, fx);
    res.evaluated = true;
  }
  return res;
}

#define VDB_INSTANTIATE(T)                                                  \
  template data::ClipDataset restore<T>(                                    \
      const unet::UNet<T>&, const data::ClipDataset&,                       \
      const diffusion::Schedule&, const diffusion::SamplerConfig&, std::size_t);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::training
