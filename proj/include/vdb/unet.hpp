// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Conditional noise predictor eps([x_t, y], t).
//
//   in conv 6 -> C0
//   encoder stage s: block(C_{s-1} -> C_s), block(C_s), skip_s, stride-2 conv
//   middle: block(C_last)
//   decoder stage s: concat(h, skip_s) -> block(2 C_s -> C_s), block(C_s),
//                    upsample x2 + conv C_s -> C_{s-1} unless s == 0
//   out: GN -> swish -> conv C0 -> 3 (zero initialized)

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vdb/layers.hpp"
#include "vdb/wtsa.hpp"

namespace vdb::unet {

struct UNetConfig {
  std::vector<std::size_t> stage_channels{32, 64, 96};
  std::size_t blocks_per_stage = 2;
  std::size_t frames = 4;
  std::size_t height = 48;
  std::size_t width = 48;
  std::size_t in_channels = 6;
  std::size_t out_channels = 3;
  std::size_t groups = 8;
  std::size_t timesteps = 1000;
  wtsa::WindowSizes window_sizes = wtsa::kDefaultWindows;
  wtsa::AblationFlags flags;
  bool skip_connections = true;
};

UNetConfig desk_config();
UNetConfig full_scale_config();
/// stage_channels {8, 16}, F = 2, 24 x 24. Small enough for finite differences.
UNetConfig micro_config();

struct StageShape {
  std::string path;  // "down", "middle" or "up"
  std::size_t stage;
  std::size_t height, width, channels;
};

/// Per-stage feature sizes. Throws ShapeError naming the first (stage,
/// window) pair that does not tile, or a stage that cannot be halved.
std::vector<StageShape> encode_decode_shapes(const UNetConfig& cfg);

/// Sinusoidal embedding [t.size(), dim] (sin half, then cos half).
template <class T>
Tensor<T> timestep_embedding(const std::vector<std::size_t>& t, std::size_t dim);

template <class T>
class UNet {
 public:
  UNet(const UNetConfig& cfg, std::uint64_t seed);

  const UNetConfig& config() const { return cfg_; }
  void set_flags(const wtsa::AblationFlags& flags) { cfg_.flags = flags; }

  /// x: [B, F, H, W, 6], one timestep per batch item. Returns [B, F, H, W, 3].
  /// H and W default to the configured size; any size that passes
  /// encode_decode_shapes is accepted.
  Var<T> forward(const Var<T>& x, const std::vector<std::size_t>& t) const;

  /// Predicted noise for [B, F, H, W, 3] (or unbatched [F, H, W, 3]) inputs.
  Var<T> denoise(const Var<T>& x_t, const Var<T>& y,
                 const std::vector<std::size_t>& t) const;
  Tensor<T> denoise(const Tensor<T>& x_t, const Tensor<T>& y,
                    std::size_t t) const;

  nn::ParamSet<T>& parameters() { return params_; }
  const nn::ParamSet<T>& parameters() const { return params_; }
  /// Parameters the active flags route gradients to. Switched-off modules
  /// stay frozen at their initial values.
  std::vector<Var<T>> trainable_parameters() const;
  bool is_trainable(nn::ParamKind kind) const;

 private:
  UNetConfig cfg_;
  nn::ParamSet<T> params_;
  nn::Linear<T> temb1_, temb2_;
  nn::Conv3x3<T> in_conv_;
  std::vector<std::vector<wtsa::BlockParams<T>>> down_, up_;
  std::vector<nn::Conv3x3<T>> downsample_, upsample_;
  wtsa::BlockParams<T> middle_;
  nn::Norm<T> out_norm_;
  nn::Conv3x3<T> out_conv_;
};

}  // namespace vdb::unet
