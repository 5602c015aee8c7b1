// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: one plain-text document of `key = value` lines grouped
// under [model], [diffusion], [train], [data] and [eval] headers. `#` starts
// a comment. Unknown sections or keys are errors. The hash of the canonical
// form (every key, fixed order) is stamped on every artifact.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdb/data.hpp"
#include "vdb/diffusion.hpp"
#include "vdb/metrics.hpp"
#include "vdb/training.hpp"
#include "vdb/unet.hpp"

namespace vdb::cli {

struct DataConfig {
  std::string root;  // empty: synthetic
  std::size_t synth_clips = 4;
  std::size_t synth_frames = 8;
  std::size_t synth_height = 48;
  std::size_t synth_width = 48;
  data::SynthBlurSpec synth;
};

struct EvalConfig {
  diffusion::SamplerConfig sampler;
  metrics::PatchSpec patches;
  std::size_t feature_dim = 32;
  std::uint64_t feature_seed = 20240917;
  std::vector<std::size_t> sa_list{1, 2, 4, 8};
};

struct RunConfig {
  unet::UNetConfig model;
  training::TrainConfig train;
  DataConfig data;
  EvalConfig eval;
  std::size_t checkpoint_every = 1000;
  std::size_t log_every = 50;
};

/// Throws UsageError "<origin>:<line>: ..." on malformed input.
RunConfig parse_config(const std::string& text,
                       const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// "section.key=value" overrides, applied after the file.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Canonical text: every key in a fixed order, parseable by parse_config.
std::string to_text(const RunConfig& cfg);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(const std::string& bytes);
/// 16 lowercase hex digits of fnv1a64(to_text(cfg)).
std::string config_hash(const RunConfig& cfg);

/// "wtsa=off,mpe=on" style ablation switches applied to cfg.model.flags.
void apply_ablation(RunConfig& cfg, const std::string& spec);

}  // namespace vdb::cli
