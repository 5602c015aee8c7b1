// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "vdb/data.hpp"
#include "vdb/errors.hpp"

namespace vdb::data {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Signed offset of a from b on a ring of circumference n, in [-n/2, n/2).
double ring_offset(double a, double b, double n) {
  double d = std::fmod(a - b, n);
  if (d < -n / 2) d += n;
  if (d >= n / 2) d -= n;
  return d;
}

}  // namespace

Scene Scene::random(const SynthBlurSpec& spec, std::size_t h, std::size_t w) {
  if (spec.kernel_len == 0) throw UsageError("synthetic blur: kernel_len must be >= 1");
  if (spec.smoothness <= 0) throw UsageError("synthetic blur: smoothness must be > 0");
  Rng rng(spec.seed);
  Scene s;
  s.smoothness = spec.smoothness;
  s.background = spec.background;
  s.bg_freq[0] = rng.uniform(0.15, 0.6);
  s.bg_freq[1] = rng.uniform(0.15, 0.6);
  for (double& p : s.bg_phase) p = rng.uniform(0, kTwoPi);
  const double cam_dir = rng.uniform(0, kTwoPi);
  s.cam_vx = spec.camera * std::cos(cam_dir);
  s.cam_vy = spec.camera * std::sin(cam_dir);
  const double size = static_cast<double>(std::min(h, w));
  for (std::size_t i = 0; i < spec.objects; ++i) {
    Object o;
    o.disc = rng.uniform() < 0.5;
    o.x0 = rng.uniform(0, static_cast<double>(w));
    o.y0 = rng.uniform(0, static_cast<double>(h));
    const double dir = rng.uniform(0, kTwoPi);
    const double speed = spec.amplitude * rng.uniform(0.5, 1.0);
    o.vx = speed * std::cos(dir);
    o.vy = speed * std::sin(dir);
    o.wobble = 0.5 * spec.amplitude * spec.smoothness / kTwoPi;
    o.phase = rng.uniform(0, kTwoPi);
    o.half_w = size * rng.uniform(0.08, 0.2);
    o.half_h = size * rng.uniform(0.08, 0.2);
    for (float& c : o.color) c = static_cast<float>(rng.uniform(0.1, 1.0));
    o.stripe_freq = rng.uniform(0.5, 1.5);
    o.stripe_angle = rng.uniform(0, std::numbers::pi);
    s.objects.push_back(o);
  }
  return s;
}

Frames Scene::render(double tau, std::size_t h, std::size_t w) const {
  Frames img({h, w, 3});
  const double fw = static_cast<double>(w), fh = static_cast<double>(h);
  if (background)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const double x = c + 0.5 - cam_vx * tau, y = r + 0.5 - cam_vy * tau;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double v =
              0.5 +
              0.25 * std::sin(bg_freq[0] * x + bg_phase[ch]) *
                  std::cos(bg_freq[1] * y + 0.7 * bg_phase[ch]) +
              0.1 * std::sin(0.5 * (bg_freq[0] + bg_freq[1]) * (x + y) +
                             bg_phase[(ch + 1) % 3]);
          img[(r * w + c) * 3 + ch] = static_cast<float>(v);
        }
      }
  for (const Object& o : objects) {
    const double wob = o.wobble * std::sin(kTwoPi * tau / smoothness + o.phase);
    const double cx = o.x0 + o.vx * tau + wob;
    const double cy = o.y0 + o.vy * tau + 0.5 * wob;
    const double ca = std::cos(o.stripe_angle), sa = std::sin(o.stripe_angle);
    for (std::size_t r = 0; r < h; ++r) {
      const double dy = ring_offset(r + 0.5, cy, fh);
      if (std::abs(dy) > o.half_h) continue;
      for (std::size_t c = 0; c < w; ++c) {
        const double dx = ring_offset(c + 0.5, cx, fw);
        if (std::abs(dx) > o.half_w) continue;
        if (o.disc && (dx * dx) / (o.half_w * o.half_w) +
                              (dy * dy) / (o.half_h * o.half_h) > 1.0)
          continue;
        const double stripe =
            0.7 + 0.15 * (1 + std::sin(o.stripe_freq * (dx * ca + dy * sa)));
        for (std::size_t ch = 0; ch < 3; ++ch)
          img[(r * w + c) * 3 + ch] = static_cast<float>(o.color[ch] * stripe);
      }
    }
  }
  return img;
}

Frames temporal_average(const Frames& frames, std::size_t n,
                        std::size_t stride) {
  if (frames.rank() != 4)
    throw ShapeError("temporal_average: expected [N, H, W, C], got " +
                     to_string(frames.shape()));
  if (n == 0 || stride == 0)
    throw UsageError("temporal_average: n and stride must be >= 1");
  const std::size_t total = frames.dim(0);
  if (total < n)
    throw ShapeError("temporal_average: " + std::to_string(total) +
                     " frames, window " + std::to_string(n));
  const std::size_t count = (total - n) / stride + 1;
  const std::size_t per = frames.size() / total;
  Frames out({count, frames.dim(1), frames.dim(2), frames.dim(3)});
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t p = 0; p < per; ++p) {
      double acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += frames[(i * stride + j) * per + p];
      out[i * per + p] = static_cast<float>(acc / static_cast<double>(n));
    }
  return out;
}

Clip synth_clip(const SynthBlurSpec& spec, std::size_t frames, std::size_t h,
                std::size_t w) {
  if (frames == 0 || h == 0 || w == 0)
    throw UsageError("synth_clip: frames, height and width must be positive");
  const Scene scene = Scene::random(spec, h, w);
  const std::size_t n = spec.kernel_len;
  const std::size_t per = h * w * 3;
  Frames sub({frames * n, h, w, 3});
  for (std::size_t j = 0; j < frames * n; ++j) {
    const Frames img = scene.render(static_cast<double>(j), h, w);
    std::copy(img.data().begin(), img.data().end(), sub.ptr() + j * per);
  }
  Clip clip;
  clip.blur = temporal_average(sub, n, n);
  clip.sharp = Frames({frames, h, w, 3});
  for (std::size_t i = 0; i < frames; ++i) {
    const float* src = sub.ptr() + (i * n + (n - 1) / 2) * per;
    std::copy(src, src + per, clip.sharp.ptr() + i * per);
  }
  return clip;
}

}  // namespace vdb::data
