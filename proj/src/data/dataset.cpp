// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "vdb/data.hpp"
#include "vdb/errors.hpp"

namespace vdb::data {

namespace fs = std::filesystem;

namespace {

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", i);
  return buf;
}

Frames load_frames(const fs::path& dir, std::size_t count) {
  Frames out;
  for (std::size_t i = 0; i < count; ++i) {
    const fs::path p = dir / frame_name(i);
    if (!fs::exists(p)) throw UsageError("missing frame " + p.string());
    const Tensor<float> img = read_png(p);
    if (i == 0) out = Frames({count, img.dim(0), img.dim(1), 3});
    if (img.shape() != Shape{out.dim(1), out.dim(2), 3})
      throw UsageError("frame " + p.string() + " is " + to_string(img.shape()) +
                       ", earlier frames are " +
                       to_string({out.dim(1), out.dim(2), 3}));
    std::copy(img.data().begin(), img.data().end(), out.ptr() + i * img.size());
  }
  return out;
}

void check_clip(const Clip& c) {
  if (c.sharp.rank() != 4 || c.sharp.dim(3) != 3)
    throw ShapeError("clip " + c.name + ": expected [N, H, W, 3] frames, got " +
                     to_string(c.sharp.shape()));
  require_same_shape(c.sharp.shape(), c.blur.shape(), "clip sharp/blur");
}

}  // namespace

ClipDataset::ClipDataset(std::vector<Clip> clips) : clips_(std::move(clips)) {
  for (const Clip& c : clips_) check_clip(c);
}

ClipDataset ClipDataset::open(const fs::path& root) {
  if (!fs::is_directory(root))
    throw UsageError("dataset root " + root.string() + " does not exist");
  const fs::path manifest = root / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw UsageError("dataset manifest " + manifest.string() + " not found");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("dataset manifest " + manifest.string() + ": " + e.what());
  }
  std::vector<Clip> clips;
  for (const auto& entry : doc.at("clips")) {
    Clip c;
    c.name = entry.at("name").get<std::string>();
    const auto frames = entry.at("frames").get<std::size_t>();
    c.sharp = load_frames(root / c.name / "sharp", frames);
    c.blur = load_frames(root / c.name / "blur", frames);
    clips.push_back(std::move(c));
  }
  if (clips.empty()) throw UsageError("dataset " + root.string() + " lists no clips");
  return ClipDataset(std::move(clips));
}

void ClipDataset::save(const fs::path& root) const {
  nlohmann::json doc;
  doc["format"] = "vdeblur-clips-1";
  doc["clips"] = nlohmann::json::array();
  for (const Clip& c : clips_) {
    const std::size_t n = c.sharp.dim(0), h = c.sharp.dim(1), w = c.sharp.dim(2);
    for (const char* kind : {"sharp", "blur"}) {
      const fs::path dir = root / c.name / kind;
      fs::create_directories(dir);
      const Frames& src = std::string(kind) == "sharp" ? c.sharp : c.blur;
      for (std::size_t i = 0; i < n; ++i) {
        Tensor<float> img({h, w, 3});
        std::copy(src.ptr() + i * img.size(), src.ptr() + (i + 1) * img.size(),
                  img.ptr());
        write_png(dir / frame_name(i), img);
      }
    }
    doc["clips"].push_back(
        {{"name", c.name}, {"frames", n}, {"height", h}, {"width", w}});
  }
  std::ofstream out(root / "manifest.json");
  out << doc.dump(2) << "\n";
  if (!out) throw Error("cannot write " + (root / "manifest.json").string());
}

ClipDataset make_synthetic(const SynthBlurSpec& spec, std::size_t count,
                           std::size_t frames, std::size_t h, std::size_t w) {
  std::vector<Clip> clips;
  for (std::size_t i = 0; i < count; ++i) {
    SynthBlurSpec s = spec;
    s.seed = spec.seed + i;
    Clip c = synth_clip(s, frames, h, w);
    char name[32];
    std::snprintf(name, sizeof name, "clip%03zu", i);
    c.name = name;
    clips.push_back(std::move(c));
  }
  return ClipDataset(std::move(clips));
}

Batch take(const ClipDataset& ds, const std::vector<BatchItem>& items,
           std::size_t frames, std::size_t crop) {
  Batch b;
  b.items = items;
  b.y = Tensor<float>({items.size(), frames, crop, crop, 3});
  b.x0 = Tensor<float>(b.y.shape());
  float* py = b.y.ptr();
  float* px = b.x0.ptr();
  for (const BatchItem& it : items) {
    if (it.clip >= ds.size()) throw UsageError("batch item names a missing clip");
    const Clip& c = ds.clips()[it.clip];
    const std::size_t h = c.sharp.dim(1), w = c.sharp.dim(2);
    if (it.start + frames > c.sharp.dim(0) || it.top + crop > h ||
        it.left + crop > w)
      throw UsageError("batch item outside clip " + c.name);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t r = 0; r < crop; ++r) {
        const std::size_t off =
            (((it.start + f) * h + it.top + r) * w + it.left) * 3;
        std::copy(c.blur.ptr() + off, c.blur.ptr() + off + crop * 3, py);
        std::copy(c.sharp.ptr() + off, c.sharp.ptr() + off + crop * 3, px);
        py += crop * 3;
        px += crop * 3;
      }
  }
  return b;
}

Batch load_batch(const ClipDataset& ds, Rng& rng, std::size_t batch_size,
                 std::size_t frames, std::size_t crop) {
  if (ds.empty()) throw UsageError("load_batch: dataset is empty");
  if (batch_size == 0 || frames == 0 || crop == 0)
    throw UsageError("load_batch: batch size, frames and crop must be positive");
  for (const Clip& c : ds.clips()) {
    if (c.sharp.dim(0) < frames)
      throw UsageError("clip " + c.name + " has " +
                       std::to_string(c.sharp.dim(0)) + " frames, need " +
                       std::to_string(frames));
    if (crop > c.sharp.dim(1) || crop > c.sharp.dim(2))
      throw UsageError("crop " + std::to_string(crop) + " larger than clip " +
                       c.name + " frames " + std::to_string(c.sharp.dim(1)) +
                       "x" + std::to_string(c.sharp.dim(2)));
  }
  std::vector<BatchItem> items;
  for (std::size_t b = 0; b < batch_size; ++b) {
    BatchItem it;
    it.clip = rng.below(ds.size());
    const Clip& c = ds.clips()[it.clip];
    it.start = rng.below(c.sharp.dim(0) - frames + 1);
    it.top = rng.below(c.sharp.dim(1) - crop + 1);
    it.left = rng.below(c.sharp.dim(2) - crop + 1);
    items.push_back(it);
  }
  return take(ds, items, frames, crop);
}

}  // namespace vdb::data
