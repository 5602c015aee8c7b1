// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/unet.hpp"

#include <cmath>

#include "vdb/ops.hpp"

namespace vdb::unet {

using nn::ParamKind;

UNetConfig desk_config() { return UNetConfig{}; }

UNetConfig full_scale_config() {
  UNetConfig c;
  c.stage_channels = {64, 128, 256};
  c.height = c.width = 144;
  return c;
}

UNetConfig micro_config() {
  UNetConfig c;
  c.stage_channels = {8, 16};
  c.frames = 2;
  c.height = c.width = 24;
  return c;
}

namespace {

void check_config(const UNetConfig& cfg) {
  if (cfg.stage_channels.empty())
    throw UsageError("unet: at least one stage is required");
  if (cfg.in_channels != 6 || cfg.out_channels != 3)
    throw UsageError("unet: in_channels must be 6 and out_channels 3");
  if (cfg.blocks_per_stage == 0 || cfg.frames == 0 || cfg.timesteps == 0)
    throw UsageError("unet: blocks_per_stage, frames and timesteps must be > 0");
  for (std::size_t m : cfg.window_sizes)
    if (m == 0) throw UsageError("unet: window sizes must be positive");
  for (std::size_t s = 0; s < cfg.stage_channels.size(); ++s) {
    const std::size_t c = cfg.stage_channels[s];
    if (c == 0 || c % cfg.groups != 0)
      throw UsageError("unet: stage " + std::to_string(s) + " has " +
                       std::to_string(c) + " channels, not divisible into " +
                       std::to_string(cfg.groups) + " groups");
    if (c % wtsa::heads_for(c) != 0)
      throw UsageError("unet: stage " + std::to_string(s) + " channels " +
                       std::to_string(c) + " not divisible by head count");
  }
}

}  // namespace

std::vector<StageShape> encode_decode_shapes(const UNetConfig& cfg) {
  check_config(cfg);
  const std::size_t stages = cfg.stage_channels.size();
  std::vector<StageShape> down;
  std::size_t h = cfg.height, w = cfg.width;
  for (std::size_t s = 0; s < stages; ++s) {
    if (h == 0 || w == 0)
      throw ShapeError("unet: stage " + std::to_string(s) + " has empty frames");
    for (std::size_t m : cfg.window_sizes)
      if (h % m != 0 || w % m != 0)
        throw ShapeError("unet: window " + std::to_string(m) +
                         " does not tile " + std::to_string(h) + "x" +
                         std::to_string(w) + " at stage " + std::to_string(s));
    down.push_back({"down", s, h, w, cfg.stage_channels[s]});
    if (s + 1 < stages) {
      if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("unet: stage " + std::to_string(s) + " size " +
                         std::to_string(h) + "x" + std::to_string(w) +
                         " cannot be halved");
      h /= 2;
      w /= 2;
    }
  }
  std::vector<StageShape> table = down;
  const StageShape& last = down.back();
  table.push_back({"middle", last.stage, last.height, last.width, last.channels});
  for (auto it = down.rbegin(); it != down.rend(); ++it) {
    StageShape up = *it;
    up.path = "up";
    table.push_back(up);
  }
  return table;
}

template <class T>
Tensor<T> timestep_embedding(const std::vector<std::size_t>& t,
                             std::size_t dim) {
  const std::size_t half = dim / 2;
  Tensor<T> out({t.size(), dim});
  for (std::size_t b = 0; b < t.size(); ++b)
    for (std::size_t i = 0; i < half; ++i) {
      const double freq =
          std::exp(-std::log(10000.0) * static_cast<double>(i) /
                   static_cast<double>(half));
      const double arg = static_cast<double>(t[b]) * freq;
      out[b * dim + i] = static_cast<T>(std::sin(arg));
      out[b * dim + half + i] = static_cast<T>(std::cos(arg));
    }
  return out;
}

template <class T>
UNet<T>::UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  encode_decode_shapes(cfg_);
  Rng rng(seed);
  const auto& ch = cfg_.stage_channels;
  const std::size_t stages = ch.size();
  const std::size_t c0 = ch[0], e = 4 * c0;
  auto block = [&](const std::string& name, std::size_t in, std::size_t out) {
    return wtsa::BlockParams<T>::make(params_, name, in, out, cfg_.frames, e,
                                      cfg_.groups, cfg_.window_sizes, rng);
  };

  temb1_ = nn::Linear<T>::make(params_, "temb.0", c0, e, rng);
  temb2_ = nn::Linear<T>::make(params_, "temb.1", e, e, rng);
  in_conv_ = nn::Conv3x3<T>::make(params_, "in", cfg_.in_channels, c0, 1, rng);

  down_.resize(stages);
  std::size_t prev = c0;
  for (std::size_t s = 0; s < stages; ++s) {
    for (std::size_t b = 0; b < cfg_.blocks_per_stage; ++b) {
      const std::string name =
          "down" + std::to_string(s) + ".block" + std::to_string(b);
      down_[s].push_back(block(name, b == 0 ? prev : ch[s], ch[s]));
    }
    if (s + 1 < stages)
      downsample_.push_back(nn::Conv3x3<T>::make(
          params_, "down" + std::to_string(s) + ".downsample", ch[s], ch[s], 2,
          rng));
    prev = ch[s];
  }
  middle_ = block("middle", ch.back(), ch.back());

  up_.resize(stages);
  upsample_.resize(stages);
  for (std::size_t s = stages; s-- > 0;) {
    for (std::size_t b = 0; b < cfg_.blocks_per_stage; ++b) {
      const std::string name =
          "up" + std::to_string(s) + ".block" + std::to_string(b);
      up_[s].push_back(block(name, b == 0 ? 2 * ch[s] : ch[s], ch[s]));
    }
    if (s > 0)
      upsample_[s] = nn::Conv3x3<T>::make(
          params_, "up" + std::to_string(s) + ".upsample", ch[s], ch[s - 1], 1,
          rng);
  }
  out_norm_ = nn::Norm<T>::make(params_, "out.norm", c0);
  out_conv_ = nn::Conv3x3<T>::make(params_, "out.conv", c0, cfg_.out_channels,
                                   1, rng, /*zero_init=*/true);
}

template <class T>
bool UNet<T>::is_trainable(ParamKind kind) const {
  const auto& f = cfg_.flags;
  switch (kind) {
    case ParamKind::kCore:
      return true;
    case ParamKind::kAttention:
      return f.wtsa;
    case ParamKind::kFramePE:
      return f.wtsa && f.mpe;
    case ParamKind::kRelBias:
      return f.wtsa && f.rpb;
  }
  return false;
}

template <class T>
std::vector<Var<T>> UNet<T>::trainable_parameters() const {
  std::vector<Var<T>> out;
  for (const auto& p : params_.items())
    if (is_trainable(p.kind)) out.push_back(p.var);
  return out;
}

namespace {

template <class T>
Var<T> upsample_video(const Var<T>& x) {
  const Shape& s = x.shape();
  Var<T> y = ops::upsample2x(ops::reshape(x, {s[0] * s[1], s[2], s[3], s[4]}));
  return ops::reshape(y, {s[0], s[1], 2 * s[2], 2 * s[3], s[4]});
}

}  // namespace

template <class T>
Var<T> UNet<T>::forward(const Var<T>& x, const std::vector<std::size_t>& t) const {
  const Shape& s = x.shape();
  if (s.size() != 5 || s[1] != cfg_.frames || s[4] != cfg_.in_channels)
    throw ShapeError("unet: input " + to_string(s) + ", expected [B, " +
                     std::to_string(cfg_.frames) + ", H, W, " +
                     std::to_string(cfg_.in_channels) + "]");
  if (s[2] != cfg_.height || s[3] != cfg_.width) {
    UNetConfig at_size = cfg_;
    at_size.height = s[2];
    at_size.width = s[3];
    encode_decode_shapes(at_size);
  }
  if (t.size() != s[0])
    throw ShapeError("unet: " + std::to_string(t.size()) + " timesteps for batch " +
                     std::to_string(s[0]));
  for (std::size_t ti : t)
    if (ti < 1 || ti > cfg_.timesteps)
      throw UsageError("unet: timestep " + std::to_string(ti) +
                       " outside [1, " + std::to_string(cfg_.timesteps) + "]");

  const std::size_t c0 = cfg_.stage_channels[0];
  const Var<T> temb = ops::swish(temb2_(ops::swish(
      temb1_(Var<T>(timestep_embedding<T>(t, c0))))));
  const auto& flags = cfg_.flags;
  const std::size_t stages = cfg_.stage_channels.size();

  Var<T> h = in_conv_(x);
  std::vector<Var<T>> skips;
  for (std::size_t st = 0; st < stages; ++st) {
    for (const auto& b : down_[st]) h = wtsa::block_forward(h, temb, b, flags);
    skips.push_back(h);
    if (st + 1 < stages) h = downsample_[st](h);
  }
  h = wtsa::block_forward(h, temb, middle_, flags);
  for (std::size_t st = stages; st-- > 0;) {
    const Var<T> skip = cfg_.skip_connections
                            ? skips[st]
                            : Var<T>(Tensor<T>(skips[st].shape()));
    h = ops::concat_last(h, skip);
    for (const auto& b : up_[st]) h = wtsa::block_forward(h, temb, b, flags);
    if (st > 0) h = upsample_[st](upsample_video(h));
  }
  h = ops::swish(nn::group_norm_frames(h, cfg_.groups, out_norm_));
  return out_conv_(h);
}

template <class T>
Var<T> UNet<T>::denoise(const Var<T>& x_t, const Var<T>& y,
                        const std::vector<std::size_t>& t) const {
  require_same_shape(x_t.shape(), y.shape(), "denoise x_t/y");
  const Shape& s = x_t.shape();
  if (s.size() == 4) {
    const Shape batched{1, s[0], s[1], s[2], s[3]};
    const Var<T> out = forward(
        ops::concat_last(ops::reshape(x_t, batched), ops::reshape(y, batched)),
        t);
    return ops::reshape(out, s);
  }
  if (s.size() != 5 || s[4] != 3)
    throw ShapeError("denoise: expected [B, F, H, W, 3], got " + to_string(s));
  return forward(ops::concat_last(x_t, y), t);
}

template <class T>
Tensor<T> UNet<T>::denoise(const Tensor<T>& x_t, const Tensor<T>& y,
                           std::size_t t) const {
  NoGradGuard guard;
  const std::size_t batch = x_t.shape().size() == 5 ? x_t.dim(0) : 1;
  return denoise(Var<T>(x_t), Var<T>(y), std::vector<std::size_t>(batch, t))
      .value();
}

#define VDB_INSTANTIATE(T)                                                  \
  template class UNet<T>;                                                   \
  template Tensor<T> timestep_embedding<T>(const std::vector<std::size_t>&, \
                                           std::size_t);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::unet
