// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Frame clips on disk and in memory, a synthetic motion-blur generator, and
// seeded batching of aligned (blurry, sharp) F-frame crops.
//
// Disk layout:
//   <root>/manifest.json
//   <root>/<clip>/sharp/000000.png ...
//   <root>/<clip>/blur/000000.png ...

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vdb/rng.hpp"
#include "vdb/tensor.hpp"

namespace vdb::data {

using Frames = Tensor<float>;  // [N, H, W, 3], values in [0, 1]

struct SynthBlurSpec {
  std::size_t kernel_len = 7;  // sub-frames averaged into one blurry frame
  double amplitude = 1.5;      // object speed, pixels per sub-frame
  double smoothness = 12.0;    // trajectory wobble period, in sub-frames
  double camera = 0.5;         // background drift, pixels per sub-frame
  std::size_t objects = 4;
  bool background = true;      // false renders objects over black
  std::uint64_t seed = 0;
};

/// A rendered scene. Objects are drawn in order over the background; each
/// moves along a seeded smooth trajectory.
struct Scene {
  struct Object {
    bool disc = false;
    double x0, y0;       // centre at time 0
    double vx, vy;       // drift
    double wobble, phase;
    double half_w, half_h;
    float color[3];
    double stripe_freq, stripe_angle;
  };
  std::vector<Object> objects;
  double bg_freq[2], bg_phase[3];
  double cam_vx = 0, cam_vy = 0;
  double smoothness = 12.0;
  bool background = true;

  static Scene random(const SynthBlurSpec& spec, std::size_t h, std::size_t w);
  /// One image [H, W, 3] at (sub-frame) time tau.
  Frames render(double tau, std::size_t h, std::size_t w) const;
};

/// frames [N, H, W, C] -> [K, H, W, C] with out[i] = mean(frames[i*stride ..
/// i*stride + n - 1]) for every window that fits.
Frames temporal_average(const Frames& frames, std::size_t n, std::size_t stride);

struct Clip {
  std::string name;
  Frames sharp;
  Frames blur;
};

/// Renders frames * kernel_len sub-frames. blur[i] averages sub-frames
/// [i*n, i*n + n - 1] and sharp[i] is the middle one of that range.
Clip synth_clip(const SynthBlurSpec& spec, std::size_t frames, std::size_t h,
                std::size_t w);

/// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded on write.
void write_png(const std::filesystem::path& path, const Tensor<float>& image);
Tensor<float> read_png(const std::filesystem::path& path);

class ClipDataset {
 public:
  ClipDataset() = default;
  explicit ClipDataset(std::vector<Clip> clips);
  /// Reads every clip listed in <root>/manifest.json. Throws UsageError when
  /// the root or a listed file is missing.
  static ClipDataset open(const std::filesystem::path& root);

  void save(const std::filesystem::path& root) const;
  const std::vector<Clip>& clips() const { return clips_; }
  std::size_t size() const { return clips_.size(); }
  bool empty() const { return clips_.empty(); }

 private:
  std::vector<Clip> clips_;
};

/// `count` clips named clip000.. with seeds seed, seed + 1, ...
ClipDataset make_synthetic(const SynthBlurSpec& spec, std::size_t count,
                           std::size_t frames, std::size_t h, std::size_t w);

struct BatchItem {
  std::size_t clip, start, top, left;
  friend bool operator==(const BatchItem&, const BatchItem&) = default;
};

struct Batch {
  Tensor<float> y;   // blurry, [B, F, crop, crop, 3]
  Tensor<float> x0;  // sharp, same shape
  std::vector<BatchItem> items;
};

/// For each item draws, in order: clip, start frame, top, left (each with
/// Rng::below).
Batch load_batch(const ClipDataset& ds, Rng& rng, std::size_t batch_size,
                 std::size_t frames, std::size_t crop);

/// The crop described by `item`, as [F, crop, crop, 3] sharp/blur pair.
Batch take(const ClipDataset& ds, const std::vector<BatchItem>& items,
           std::size_t frames, std::size_t crop);

}  // namespace vdb::data
