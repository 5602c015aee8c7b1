// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Subcommands of the vdeblur tool. Each returns a process exit code and
// throws vdb::Error subclasses for the caller to map:
// UsageError/ShapeError -> 2, NumericalError -> 3.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vdb/config.hpp"

namespace vdb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct ConfigSource {
  std::string path;                    // empty: built-in desk defaults
  std::vector<std::string> overrides;  // section.key=value
};

RunConfig resolve_config(const ConfigSource& src);

struct DataSource {
  std::string root;        // overrides [data] root
  bool synthetic = false;  // render the [data] synthetic set in memory
};

data::ClipDataset open_dataset(const RunConfig& cfg, const DataSource& src);

struct TrainOptions {
  ConfigSource config;
  DataSource data;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::string ablate;  // "wtsa=off,..."
  std::filesystem::path out = "runs/train";
  std::string resume;
};
int cmd_train(const TrainOptions& o, std::ostream& log);

struct SamplerOverrides {
  std::string sampler;  // ddpm | ddim
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
};

struct SampleOptions {
  std::string checkpoint;
  DataSource data;
  SamplerOverrides sampler;
  std::filesystem::path out = "runs/sample";
};
int cmd_sample(const SampleOptions& o, std::ostream& log);

enum class EvalMode { kModel, kIdentity, kBlurry };

struct EvaluateOptions {
  std::string checkpoint;  // not needed for identity / blurry modes
  ConfigSource config;     // used when no checkpoint is given
  DataSource data;
  SamplerOverrides sampler;
  EvalMode mode = EvalMode::kModel;
  std::optional<std::size_t> patch;
  std::filesystem::path out = "runs/evaluate.csv";
};
int cmd_evaluate(const EvaluateOptions& o, std::ostream& log);

struct SaCurveOptions {
  std::string checkpoint;
  DataSource data;
  SamplerOverrides sampler;
  std::vector<std::size_t> x;              // empty: [eval] sa_list
  std::vector<std::uint64_t> base_seeds;   // empty: sample_seed only
  bool save_samples = false;
  std::filesystem::path out = "runs/sa_curve";
};
int cmd_sa_curve(const SaCurveOptions& o, std::ostream& log);

struct AblateOptions {
  ConfigSource config;
  DataSource data;
  std::string suite = "all";  // modules | windows | all
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::optional<std::size_t> steps;
  bool evaluate = false;
  std::filesystem::path out = "runs/ablate";
};
int cmd_ablate(const AblateOptions& o, std::ostream& log);

struct InspectOptions {
  ConfigSource config;
  std::string checkpoint;
};
int cmd_inspect(const InspectOptions& o, std::ostream& log);

struct MakeSyntheticOptions {
  ConfigSource config;
  std::filesystem::path out = "data/synthetic";
};
int cmd_make_synthetic(const MakeSyntheticOptions& o, std::ostream& log);

/// Raw float tensor file: "vdbt 1 <rank> <dims...>\n" then little-endian
/// float32 values. Exact, unlike 8-bit PNG.
void write_tensor(const std::filesystem::path& path, const Tensor<float>& t);
Tensor<float> read_tensor(const std::filesystem::path& path);

/// Median; the mean of the two middle values for even sizes.
double median(std::vector<double> v);

}  // namespace vdb::cli
