// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vdb/errors.hpp"
#include "vdb/kernels.hpp"
#include "vdb/plot.hpp"

namespace vdb::cli {

namespace fs = std::filesystem;
using training::TrainState;

RunConfig resolve_config(const ConfigSource& src) {
  RunConfig cfg = src.path.empty() ? parse_config("", "<defaults>")
                                   : load_config(src.path);
  for (const auto& o : src.overrides) apply_override(cfg, o);
  return cfg;
}

data::ClipDataset open_dataset(const RunConfig& cfg, const DataSource& src) {
  if (src.synthetic) {
    const DataConfig& d = cfg.data;
    return data::make_synthetic(d.synth, d.synth_clips, d.synth_frames,
                                d.synth_height, d.synth_width);
  }
  const std::string root = src.root.empty() ? cfg.data.root : src.root;
  if (root.empty())
    throw UsageError("no dataset: pass --data <root>, set [data] root, or use --synthetic");
  return data::ClipDataset::open(root);
}

double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_tensor(const fs::path& path, const Tensor<float>& t) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << "vdbt 1 " << t.rank();
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw UsageError("cannot write " + path.string());
}

Tensor<float> read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line;
  if (!in || !std::getline(in, line))
    throw UsageError("cannot read tensor " + path.string());
  std::istringstream ls(line);
  std::string magic;
  int version = 0;
  std::size_t rank = 0;
  ls >> magic >> version >> rank;
  if (magic != "vdbt" || version != 1)
    throw UsageError(path.string() + " is not a tensor file");
  Shape shape(rank);
  for (auto& d : shape) ls >> d;
  Tensor<float> t(shape);
  if (!in.read(reinterpret_cast<char*>(t.ptr()),
               static_cast<std::streamsize>(t.size() * sizeof(float))))
    throw UsageError("truncated tensor " + path.string());
  return t;
}

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct LoadedModel {
  RunConfig cfg;
  std::string hash;
  training::CheckpointHeader header;
  std::unique_ptr<TrainState<float>> state;
};

LoadedModel load_model(const std::string& checkpoint) {
  if (checkpoint.empty()) throw UsageError("--checkpoint is required");
  LoadedModel m;
  m.header = training::read_checkpoint_header(checkpoint);
  m.cfg = parse_config(m.header.config_text, checkpoint + "#config");
  m.hash = config_hash(m.cfg);
  if (m.hash != m.header.config_hash)
    throw UsageError("checkpoint " + checkpoint + ": config hash " +
                     m.header.config_hash + " does not match its config (" +
                     m.hash + ")");
  m.state = std::make_unique<TrainState<float>>(m.cfg.model, m.cfg.train);
  training::load_checkpoint(checkpoint, *m.state);
  return m;
}

void apply_sampler(RunConfig& cfg, const SamplerOverrides& s) {
  if (!s.sampler.empty()) cfg.eval.sampler.kind = diffusion::parse_sampler(s.sampler);
  if (s.steps) cfg.eval.sampler.ddim_steps = *s.steps;
  if (s.seed) cfg.eval.sampler.seed = *s.seed;
  diffusion::ddim_timesteps(cfg.model.timesteps, cfg.eval.sampler.ddim_steps);
}

std::string sampler_note(const RunConfig& cfg) {
  const auto& s = cfg.eval.sampler;
  return "sampler=" + diffusion::to_string(s.kind) + " steps=" +
         std::to_string(s.kind == diffusion::SamplerKind::kDdim
                            ? s.ddim_steps
                            : cfg.model.timesteps) +
         " sample_seed=" + std::to_string(s.seed);
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

Tensor<float> frame_of(const data::Frames& f, std::size_t i) {
  const std::size_t per = f.size() / f.dim(0);
  Tensor<float> out({f.dim(1), f.dim(2), f.dim(3)});
  std::copy(f.ptr() + i * per, f.ptr() + (i + 1) * per, out.ptr());
  return out;
}

// Clips whose `blur` holds the frame-wise mean of the first x restorations.
data::ClipDataset average_restorations(const std::vector<data::ClipDataset>& runs,
                                       std::size_t x) {
  std::vector<data::Clip> clips;
  for (std::size_t c = 0; c < runs[0].size(); ++c) {
    std::vector<Tensor<float>> parts;
    for (std::size_t k = 0; k < x; ++k) parts.push_back(runs[k].clips()[c].blur);
    data::Clip clip = runs[0].clips()[c];
    clip.blur = diffusion::mean_of(parts);
    clips.push_back(std::move(clip));
  }
  return data::ClipDataset(std::move(clips));
}

std::string report_csv(const training::MetricReport& r, const std::string& header) {
  std::string csv = header;
  csv += "clip,frame,psnr,ssim,blur_psnr,blur_ssim\n";
  for (const auto& f : r.frames)
    csv += f.clip + "," + std::to_string(f.frame) + "," + metrics::format_psnr(f.psnr) +
           "," + fmt(f.ssim) + "," + metrics::format_psnr(f.blur_psnr) + "," +
           fmt(f.blur_ssim) + "\n";
  csv += "summary,frames=" + std::to_string(r.frames.size()) +
         ",mean_psnr=" + metrics::format_psnr(r.mean_psnr) +
         ",mean_ssim=" + fmt(r.mean_ssim) +
         ",mean_blur_psnr=" + metrics::format_psnr(r.mean_blur_psnr) +
         ",fid=" + fmt(r.fid) + ",kid_x1000=" + fmt(r.kid_x1000) +
         ",patches_per_frame=" + std::to_string(r.patches_per_frame) +
         ",patch_size=" + std::to_string(r.patch_size) +
         ",features=" + std::to_string(r.feature_count) +
         ",extractor=" + r.extractor + "\n";
  return csv;
}

}  // namespace

int cmd_train(const TrainOptions& o, std::ostream& log) {
  RunConfig cfg = resolve_config(o.config);
  if (!o.ablate.empty()) apply_ablation(cfg, o.ablate);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.steps) {
    if (*o.steps == 0) throw UsageError("--steps must be positive");
    cfg.train.total_steps = *o.steps;
    if (cfg.train.warmup_steps >= cfg.train.total_steps) {
      cfg.train.warmup_steps = cfg.train.total_steps / 4;
      log << "note: warmup shortened to " << cfg.train.warmup_steps
          << " steps to fit --steps " << cfg.train.total_steps << "\n";
    }
  }
  const std::string hash = config_hash(cfg);
  const data::ClipDataset ds = open_dataset(cfg, o.data);

  TrainState<float> state(cfg.model, cfg.train);
  if (!o.resume.empty()) {
    const auto header = training::read_checkpoint_header(o.resume);
    if (header.config_hash != hash)
      throw UsageError("cannot resume: " + o.resume + " was trained with config " +
                       header.config_hash + ", this run is " + hash);
    training::load_checkpoint(o.resume, state);
  }
  fs::create_directories(o.out);
  const std::string text = to_text(cfg);
  write_text(o.out / "config.txt", text);
  training::LossLog trace(o.out / "loss.csv", hash, cfg.train.seed,
                          !o.resume.empty());
  const fs::path ckpt = o.out / "checkpoint.bin";
  log << "config " << hash << ", " << state.net.parameters().element_count()
      << " parameters, kernels " << kernels::isa_name(kernels::active_isa())
      << "\n";

  training::StepResult last;
  try {
    training::train<float>(state, ds, [&](const TrainState<float>& s,
                                          const training::StepResult& r) {
      last = r;
      trace.write(s.step, r);
      if (cfg.log_every && s.step % cfg.log_every == 0)
        log << "step " << s.step << " loss " << fmt(r.loss, "%.6g") << " lr "
            << fmt(r.lr, "%.3g") << "\n";
      if (cfg.checkpoint_every && s.step % cfg.checkpoint_every == 0)
        training::save_checkpoint(ckpt, s, text, hash);
    });
  } catch (const NumericalError&) {
    const fs::path dump = o.out / "crash.ckpt";
    training::save_checkpoint(dump, state, text, hash);
    log << "state dumped to " << dump.string() << "\n";
    throw;
  }
  training::save_checkpoint(ckpt, state, text, hash);
  log << "final loss " << fmt(last.loss, "%.9g") << "\n";
  log << "final checkpoint " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_sample(const SampleOptions& o, std::ostream& log) {
  LoadedModel m = load_model(o.checkpoint);
  apply_sampler(m.cfg, o.sampler);
  const data::ClipDataset ds = open_dataset(m.cfg, o.data);
  const auto restored = training::restore(m.state->net, ds, m.state->schedule,
                                          m.cfg.eval.sampler);
  nlohmann::json manifest;
  manifest["config_hash"] = m.hash;
  manifest["checkpoint_step"] = m.header.step;
  manifest["sampler"] = diffusion::to_string(m.cfg.eval.sampler.kind);
  manifest["steps"] = m.cfg.eval.sampler.kind == diffusion::SamplerKind::kDdim
                          ? m.cfg.eval.sampler.ddim_steps
                          : m.cfg.model.timesteps;
  manifest["seed"] = m.cfg.eval.sampler.seed;
  manifest["clips"] = nlohmann::json::array();
  for (const auto& clip : restored.clips()) {
    const fs::path dir = o.out / clip.name / "restored";
    fs::create_directories(dir);
    for (std::size_t i = 0; i < clip.blur.dim(0); ++i)
      data::write_png(dir / (frame_name(i) + ".png"), frame_of(clip.blur, i));
    manifest["clips"].push_back({{"name", clip.name}, {"frames", clip.blur.dim(0)}});
  }
  write_text(o.out / "manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << restored.size() << " clips to " << o.out.string() << " ("
      << sampler_note(m.cfg) << ", config " << m.hash << ")\n";
  return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& log) {
  RunConfig cfg;
  std::string hash;
  data::ClipDataset restored;
  std::unique_ptr<LoadedModel> model;
  if (o.mode == EvalMode::kModel) {
    model = std::make_unique<LoadedModel>(load_model(o.checkpoint));
    cfg = model->cfg;
    hash = model->hash;
    apply_sampler(cfg, o.sampler);
  } else {
    cfg = resolve_config(o.config);
    hash = config_hash(cfg);
  }
  if (o.patch) cfg.eval.patches.size = *o.patch;
  const data::ClipDataset ds = open_dataset(cfg, o.data);
  std::string mode = "model";
  if (o.mode == EvalMode::kModel) {
    restored = training::restore(model->state->net, ds, model->state->schedule,
                                 cfg.eval.sampler);
  } else {
    std::vector<data::Clip> clips = ds.clips();
    if (o.mode == EvalMode::kIdentity) {
      mode = "identity";
      for (auto& c : clips) c.blur = c.sharp;
    } else {
      mode = "blurry";
    }
    restored = data::ClipDataset(std::move(clips));
  }
  const metrics::RandomProjectionExtractor fx(cfg.eval.feature_dim,
                                              cfg.eval.feature_seed);
  const auto rep = training::score(restored, ds, cfg.eval.patches, fx);
  const std::string header = "# config_hash=" + hash + " mode=" + mode + " " +
                             sampler_note(cfg) + "\n";
  write_text(o.out, report_csv(rep, header));
  log << "psnr " << metrics::format_psnr(rep.mean_psnr) << " (input "
      << metrics::format_psnr(rep.mean_blur_psnr) << "), ssim " << fmt(rep.mean_ssim)
      << ", fid " << fmt(rep.fid) << ", kid_x1000 " << fmt(rep.kid_x1000) << "\n";
  log << "wrote " << o.out.string() << "\n";
  return kExitOk;
}

int cmd_sa_curve(const SaCurveOptions& o, std::ostream& log) {
  LoadedModel m = load_model(o.checkpoint);
  apply_sampler(m.cfg, o.sampler);
  const std::vector<std::size_t> xs = o.x.empty() ? m.cfg.eval.sa_list : o.x;
  if (xs.empty()) throw UsageError("sa-curve: empty x list");
  for (std::size_t x : xs)
    if (x == 0) throw UsageError("sa-curve: x must be >= 1");
  const std::vector<std::uint64_t> bases =
      o.base_seeds.empty() ? std::vector<std::uint64_t>{m.cfg.eval.sampler.seed}
                           : o.base_seeds;
  const std::size_t x_max = *std::max_element(xs.begin(), xs.end());
  const data::ClipDataset ds = open_dataset(m.cfg, o.data);
  const metrics::RandomProjectionExtractor fx(m.cfg.eval.feature_dim,
                                              m.cfg.eval.feature_seed);

  // metric[x index][base index]
  std::vector<std::vector<training::MetricReport>> reps(xs.size());
  bool all_exact = true;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    // Sample k of base seed b uses seed b_seed * 1000 + k.
    std::vector<data::ClipDataset> runs;
    for (std::size_t k = 0; k < x_max; ++k) {
      diffusion::SamplerConfig sc = m.cfg.eval.sampler;
      sc.seed = bases[b] * 1000 + k;
      runs.push_back(training::restore(m.state->net, ds, m.state->schedule, sc));
      log << "base seed " << bases[b] << ": sample " << k + 1 << "/" << x_max << "\n";
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const data::ClipDataset avg = average_restorations(runs, xs[i]);
      reps[i].push_back(training::score(avg, ds, m.cfg.eval.patches, fx));
      if (!o.save_samples) continue;
      // Keep the first clip's frames so the mean can be re-derived offline.
      const fs::path dir = o.out / "samples" / ("base" + std::to_string(bases[b])) /
                           ("sa" + std::to_string(xs[i]));
      std::vector<Tensor<float>> reread;
      for (std::size_t k = 0; k < xs[i]; ++k) {
        const fs::path p = dir / ("sample" + std::to_string(k) + ".vdbt");
        write_tensor(p, runs[k].clips()[0].blur);
        reread.push_back(read_tensor(p));
      }
      write_tensor(dir / "average.vdbt", avg.clips()[0].blur);
      const bool exact = diffusion::mean_of(reread) == read_tensor(dir / "average.vdbt");
      all_exact = all_exact && exact;
    }
  }

  std::string csv = "# config_hash=" + m.hash + " " + sampler_note(m.cfg) +
                    " base_seeds=";
  for (std::size_t b = 0; b < bases.size(); ++b)
    csv += (b ? ";" : "") + std::to_string(bases[b]);
  csv += " (medians over base seeds)\nx,psnr,ssim,fid,kid_x1000\n";
  std::vector<double> xd, psnr, ssim, fid, kid;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> p, s, f, k;
    for (const auto& r : reps[i]) {
      p.push_back(r.mean_psnr);
      s.push_back(r.mean_ssim);
      f.push_back(r.fid);
      k.push_back(r.kid_x1000);
    }
    xd.push_back(static_cast<double>(xs[i]));
    psnr.push_back(median(p));
    ssim.push_back(median(s));
    fid.push_back(median(f));
    kid.push_back(median(k));
    csv += std::to_string(xs[i]) + "," + metrics::format_psnr(psnr.back()) + "," +
           fmt(ssim.back()) + "," + fmt(fid.back()) + "," + fmt(kid.back()) + "\n";
  }
  write_text(o.out / "sa_curve.csv", csv);
  write_text(o.out / "sa_curve.svg",
             svg_line_plot("Sample averaging (SA-x)", "config " + m.hash + ", " +
                                                          sampler_note(m.cfg),
                           "x (samples averaged)", xd,
                           {{"PSNR (dB)", psnr}, {"SSIM", ssim}, {"FID", fid},
                            {"KID x1000", kid}}));

  bool psnr_up = true, fid_up = true;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] <= xs[i - 1]) continue;
    psnr_up = psnr_up && psnr[i] >= psnr[i - 1];
    fid_up = fid_up && fid[i] >= fid[i - 1];
  }
  log << "trend: psnr non-decreasing in x: " << (psnr_up ? "yes" : "no")
      << "; fid non-decreasing in x: " << (fid_up ? "yes" : "no") << "\n";
  if (o.save_samples)
    log << "saved samples re-average exactly: " << (all_exact ? "yes" : "no") << "\n";
  log << "wrote " << (o.out / "sa_curve.csv").string() << " and sa_curve.svg\n";
  return all_exact ? kExitOk : kExitNumerical;
}

int cmd_ablate(const AblateOptions& o, std::ostream& log) {
  RunConfig cfg = resolve_config(o.config);
  if (o.steps) {
    cfg.train.total_steps = *o.steps;
    if (cfg.train.warmup_steps >= cfg.train.total_steps)
      cfg.train.warmup_steps = cfg.train.total_steps / 4;
  }
  std::vector<training::AblationVariant> variants;
  if (o.suite == "modules" || o.suite == "all") variants = training::module_variants();
  if (o.suite == "windows" || o.suite == "all")
    for (auto& v : training::window_variants()) variants.push_back(v);
  if (variants.empty())
    throw UsageError("unknown ablation suite '" + o.suite + "' (modules, windows, all)");
  if (o.seeds.empty()) throw UsageError("ablate: need at least one seed");
  const data::ClipDataset ds = open_dataset(cfg, o.data);
  const std::string hash = config_hash(cfg);
  const std::size_t tail = std::clamp<std::size_t>(cfg.train.total_steps / 10, 1, 200);

  fs::create_directories(o.out);
  std::ofstream csv(o.out / "ablation.csv");
  csv << "# config_hash=" << hash << " steps=" << cfg.train.total_steps
      << " tail=" << tail << "\n"
      << "variant,seed,wtsa,mpe,rpb,windows,final_loss,psnr,ssim,fid,kid_x1000\n";
  std::vector<std::pair<std::string, double>> medians;
  for (const auto& v : variants) {
    std::vector<double> losses;
    for (std::uint64_t seed : o.seeds) {
      training::TrainConfig t = cfg.train;
      t.seed = seed;
      const auto r = training::ablation_run(v, cfg.model, t, ds, tail,
                                            o.evaluate ? &cfg.eval.sampler : nullptr);
      losses.push_back(r.final_loss);
      const auto& w = v.windows;
      csv << v.name << "," << seed << "," << v.flags.wtsa << "," << v.flags.mpe
          << "," << v.flags.rpb << "," << w[0] << "-" << w[1] << "-" << w[2]
          << "-" << w[3] << "," << fmt(r.final_loss, "%.9g") << ","
          << (r.evaluated ? metrics::format_psnr(r.report.mean_psnr) : "") << ","
          << (r.evaluated ? fmt(r.report.mean_ssim) : "") << ","
          << (r.evaluated ? fmt(r.report.fid) : "") << ","
          << (r.evaluated ? fmt(r.report.kid_x1000) : "") << "\n";
      csv.flush();
      log << v.name << " seed " << seed << ": final loss "
          << fmt(r.final_loss, "%.6g") << "\n";
    }
    medians.emplace_back(v.name, median(losses));
  }
  csv << "\nvariant,median_final_loss\n";
  for (const auto& [name, loss] : medians) csv << name << "," << fmt(loss, "%.9g") << "\n";
  auto find = [&](const std::string& name) -> const double* {
    for (const auto& [n, l] : medians)
      if (n == name) return &l;
    return nullptr;
  };
  if (const double *j = find("joint-position"), *b = find("baseline"); j && b)
    log << "joint-position <= baseline: " << (*j <= *b ? "yes" : "no") << " ("
        << fmt(*j, "%.6g") << " vs " << fmt(*b, "%.6g")
        << "; published large-scale PSNR 32.089 vs 31.609)\n";
  if (const double *a = find("win-6432"), *b = find("win-1111"); a && b)
    log << "[6,4,3,2] <= [1,1,1,1]: " << (*a <= *b ? "yes" : "no") << " ("
        << fmt(*a, "%.6g") << " vs " << fmt(*b, "%.6g")
        << "; published large-scale PSNR 27.223 vs 27.016)\n";
  log << "wrote " << (o.out / "ablation.csv").string() << "\n";
  return kExitOk;
}

int cmd_inspect(const InspectOptions& o, std::ostream& log) {
  RunConfig cfg;
  if (!o.checkpoint.empty()) {
    const auto header = training::read_checkpoint_header(o.checkpoint);
    cfg = parse_config(header.config_text, o.checkpoint + "#config");
    log << "checkpoint " << o.checkpoint << ": step " << header.step << ", dtype "
        << header.dtype << ", rng " << header.rng << "\n";
  } else {
    cfg = resolve_config(o.config);
  }
  log << "config hash " << config_hash(cfg) << "\n";
  log << "kernels " << kernels::isa_name(kernels::active_isa()) << "\n";
  log << "stage shapes (H x W x C):\n";
  for (const auto& s : unet::encode_decode_shapes(cfg.model))
    log << "  " << s.path << " " << s.stage << ": " << s.height << " x " << s.width
        << " x " << s.channels << "\n";
  const unet::UNet<float> net(cfg.model, cfg.train.seed);
  std::size_t by_kind[4] = {0, 0, 0, 0};
  for (const auto& p : net.parameters().items())
    by_kind[static_cast<int>(p.kind)] += p.var.size();
  log << "parameters " << net.parameters().element_count() << " (core " << by_kind[0]
      << ", attention " << by_kind[1] << ", frame encoding " << by_kind[2]
      << ", relative bias " << by_kind[3] << ")\n";
  std::size_t trainable = 0;
  for (const auto& v : net.trainable_parameters()) trainable += v.size();
  log << "trainable with current switches " << trainable << "\n";
  return kExitOk;
}

int cmd_make_synthetic(const MakeSyntheticOptions& o, std::ostream& log) {
  const RunConfig cfg = resolve_config(o.config);
  const data::ClipDataset ds = open_dataset(cfg, DataSource{"", true});
  ds.save(o.out);
  log << "wrote " << ds.size() << " clips of " << cfg.data.synth_frames
      << " frames to " << o.out.string() << "\n";
  return kExitOk;
}

}  // namespace vdb::cli
