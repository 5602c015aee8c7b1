// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "vdb/errors.hpp"

namespace vdb::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty())
    throw UsageError("expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw UsageError("expected on/off, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');)
    out.push_back(parse_u64(trim(item)));
  if (out.empty()) throw UsageError("expected a comma-separated list");
  return out;
}

std::string format_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string format_list(const auto& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_KEY(sec, key, field)                                              \
  Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = parse_u64(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define DOUBLE_KEY(sec, key, field)                                            \
  Key{sec, key,                                                                \
      [](RunConfig& c, const std::string& v) { c.field = parse_double(v); },   \
      [](const RunConfig& c) { return format_double(c.field); }}
#define BOOL_KEY(sec, key, field)                                              \
  Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
      [](const RunConfig& c) { return std::string(c.field ? "on" : "off"); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"model", "stage_channels",
          [](RunConfig& c, const std::string& v) {
            c.model.stage_channels = parse_list(v);
          },
          [](const RunConfig& c) { return format_list(c.model.stage_channels); }},
      SIZE_KEY("model", "blocks_per_stage", model.blocks_per_stage),
      SIZE_KEY("model", "frames", model.frames),
      SIZE_KEY("model", "height", model.height),
      SIZE_KEY("model", "width", model.width),
      SIZE_KEY("model", "groups", model.groups),
      Key{"model", "window_sizes",
          [](RunConfig& c, const std::string& v) {
            const auto w = parse_list(v);
            if (w.size() != 4)
              throw UsageError("window_sizes needs exactly 4 entries");
            std::copy(w.begin(), w.end(), c.model.window_sizes.begin());
          },
          [](const RunConfig& c) { return format_list(c.model.window_sizes); }},
      BOOL_KEY("model", "wtsa", model.flags.wtsa),
      BOOL_KEY("model", "mpe", model.flags.mpe),
      BOOL_KEY("model", "rpb", model.flags.rpb),
      BOOL_KEY("model", "skip_connections", model.skip_connections),

      SIZE_KEY("diffusion", "timesteps", model.timesteps),
      DOUBLE_KEY("diffusion", "beta_start", train.beta_start),
      DOUBLE_KEY("diffusion", "beta_end", train.beta_end),
      Key{"diffusion", "sampler",
          [](RunConfig& c, const std::string& v) {
            c.eval.sampler.kind = diffusion::parse_sampler(v);
          },
          [](const RunConfig& c) { return diffusion::to_string(c.eval.sampler.kind); }},
      SIZE_KEY("diffusion", "ddim_steps", eval.sampler.ddim_steps),
      SIZE_KEY("diffusion", "sample_seed", eval.sampler.seed),
      BOOL_KEY("diffusion", "clip_denoised", eval.sampler.clip_denoised),

      DOUBLE_KEY("train", "lr_start", train.lr_start),
      DOUBLE_KEY("train", "lr_peak", train.lr_peak),
      SIZE_KEY("train", "warmup_steps", train.warmup_steps),
      SIZE_KEY("train", "total_steps", train.total_steps),
      DOUBLE_KEY("train", "beta1", train.beta1),
      DOUBLE_KEY("train", "beta2", train.beta2),
      DOUBLE_KEY("train", "adam_eps", train.adam_eps),
      DOUBLE_KEY("train", "grad_clip", train.grad_clip),
      SIZE_KEY("train", "batch_size", train.batch_size),
      SIZE_KEY("train", "crop", train.crop),
      SIZE_KEY("train", "seed", train.seed),
      SIZE_KEY("train", "checkpoint_every", checkpoint_every),
      SIZE_KEY("train", "log_every", log_every),

      Key{"data", "root",
          [](RunConfig& c, const std::string& v) { c.data.root = v; },
          [](const RunConfig& c) { return c.data.root; }},
      SIZE_KEY("data", "synth_clips", data.synth_clips),
      SIZE_KEY("data", "synth_frames", data.synth_frames),
      SIZE_KEY("data", "synth_height", data.synth_height),
      SIZE_KEY("data", "synth_width", data.synth_width),
      SIZE_KEY("data", "kernel_len", data.synth.kernel_len),
      DOUBLE_KEY("data", "amplitude", data.synth.amplitude),
      DOUBLE_KEY("data", "smoothness", data.synth.smoothness),
      DOUBLE_KEY("data", "camera", data.synth.camera),
      SIZE_KEY("data", "objects", data.synth.objects),
      SIZE_KEY("data", "synth_seed", data.synth.seed),

      SIZE_KEY("eval", "patch_size", eval.patches.size),
      SIZE_KEY("eval", "max_patches", eval.patches.max_count),
      SIZE_KEY("eval", "feature_dim", eval.feature_dim),
      SIZE_KEY("eval", "feature_seed", eval.feature_seed),
      Key{"eval", "sa_list",
          [](RunConfig& c, const std::string& v) { c.eval.sa_list = parse_list(v); },
          [](const RunConfig& c) { return format_list(c.eval.sa_list); }},
  };
  return table;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef BOOL_KEY

const Key* find_key(const std::string& section, const std::string& name) {
  for (const Key& k : keys())
    if (section == k.section && name == k.name) return &k;
  return nullptr;
}

bool known_section(const std::string& s) {
  for (const Key& k : keys())
    if (s == k.section) return true;
  return false;
}

void validate(const RunConfig& c) {
  unet::encode_decode_shapes(c.model);
  training::lr_at(0, c.train);
  diffusion::Schedule::linear(c.model.timesteps, c.train.beta_start,
                              c.train.beta_end);
  diffusion::ddim_timesteps(c.model.timesteps, c.eval.sampler.ddim_steps);
  if (c.train.batch_size == 0) throw UsageError("train.batch_size must be > 0");
  if (c.train.crop != c.model.height || c.train.crop != c.model.width)
    throw UsageError("train.crop (" + std::to_string(c.train.crop) +
                     ") must equal model.height and model.width");
  for (std::size_t x : c.eval.sa_list)
    if (x == 0) throw UsageError("eval.sa_list entries must be >= 1");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string section;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section))
        throw UsageError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(where + "expected 'key = value'");
    if (section.empty()) throw UsageError(where + "key outside of a section");
    const std::string name = trim(line.substr(0, eq));
    const Key* key = find_key(section, name);
    if (!key) throw UsageError(where + "unknown key '" + name + "' in [" + section + "]");
    try {
      key->set(cfg, trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(where + name + ": " + e.what());
    }
  }
  try {
    validate(cfg);
  } catch (const Error& e) {
    throw UsageError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw UsageError("override '" + assignment + "' is not section.key=value");
  const std::string section = trim(assignment.substr(0, dot));
  const std::string name = trim(assignment.substr(dot + 1, eq - dot - 1));
  const Key* key = find_key(section, name);
  if (!key) throw UsageError("unknown key '" + section + "." + name + "'");
  key->set(cfg, trim(assignment.substr(eq + 1)));
  validate(cfg);
}

std::string to_text(const RunConfig& cfg) {
  std::string out, section;
  for (const Key& k : keys()) {
    if (section != k.section) {
      section = k.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_text(cfg))));
  return buf;
}

void apply_ablation(RunConfig& cfg, const std::string& spec) {
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw UsageError("ablation '" + item + "' is not name=on|off");
    const std::string name = trim(item.substr(0, eq));
    const bool on = parse_bool(trim(item.substr(eq + 1)));
    if (name == "wtsa") cfg.model.flags.wtsa = on;
    else if (name == "mpe") cfg.model.flags.mpe = on;
    else if (name == "rpb") cfg.model.flags.rpb = on;
    else throw UsageError("unknown ablation switch '" + name + "' (wtsa, mpe, rpb)");
  }
}

}  // namespace vdb::cli
