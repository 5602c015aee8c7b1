// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance harness. Prints one line per criterion:
//   PASS|FAIL|NOT RUN criterion N: <detail> (<seconds>s)
// and exits non-zero if any criterion that ran failed.
//
// Criteria 6 and 7 (and the trend half of 9) need 20k-step desk trainings.
// They run only with --long; the default run measures the desk step time and
// prints the projected cost instead.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vdb/commands.hpp"
#include "vdb/config.hpp"
#include "vdb/gradcheck.hpp"
#include "vdb/kernels.hpp"
#include "vdb/mrpe.hpp"
#include "vdb/ops.hpp"
#include "vdb/training.hpp"
#include "vdb/windowing.hpp"
#include "vdb/wtsa.hpp"

namespace {

using namespace vdb;
namespace fs = std::filesystem;
using TD = Tensor<double>;
using VD = Var<double>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  enum Status { kPass, kFail, kNotRun } status = kFail;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return ok ? pass(d) : fail(d); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TD normal_tensor(const Shape& s, Rng& rng, double sd = 1.0) {
  TD t(s);
  for (double& v : t.data()) v = rng.normal(0.0, sd);
  return t;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. partition / reverse

Outcome rearrangement() {
  Rng rng(101);
  const std::size_t windows[] = {1, 2, 3, 4, 6};
  const std::size_t frames[] = {1, 2, 4};
  std::size_t geometries = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = windows[rng.below(5)];
    const std::size_t f = frames[rng.below(3)];
    // Multiples of M inside [8, 48].
    const std::size_t lo = (8 + m - 1) / m, hi = 48 / m;
    const std::size_t h = m * (lo + rng.below(hi - lo + 1));
    const std::size_t w = m * (lo + rng.below(hi - lo + 1));
    const std::size_t b = 1 + rng.below(2), c = 1 + rng.below(3);
    const TD x = normal_tensor({b, f, h, w, c}, rng);
    const TD y = windowing::partition(x, m);
    const auto g = windowing::WindowGeometry::from_shape(x.shape(), m);
    if (windowing::reverse(y, g).storage() != x.storage())
      return fail("reverse(partition(x)) != x for B" + std::to_string(b) + " F" +
                  std::to_string(f) + " " + std::to_string(h) + "x" + std::to_string(w) +
                  " M" + std::to_string(m));
    const std::size_t nh = h / m, nw = w / m, tokens = f * m * m;
    for (std::size_t bi = 0; bi < b; ++bi)
      for (std::size_t wr = 0; wr < nh; ++wr)
        for (std::size_t wc = 0; wc < nw; ++wc)
          for (std::size_t fi = 0; fi < f; ++fi)
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < m; ++j)
                for (std::size_t ci = 0; ci < c; ++ci) {
                  const std::size_t win = (bi * nh + wr) * nw + wc;
                  const std::size_t tok = (fi * m + i) * m + j;
                  const std::size_t src =
                      (((bi * f + fi) * h + wr * m + i) * w + wc * m + j) * c + ci;
                  if (y[(win * tokens + tok) * c + ci] != x[src])
                    return fail("partition disagrees with the index oracle at M" +
                                std::to_string(m));
                }
    ++geometries;
  }
  return pass(std::to_string(geometries) + " geometries bit-identical, index oracle agrees");
}

// ---------------------------------------------------------------------------
// 2. B_video blocks

Outcome tiling_identity() {
  Rng rng(202);
  std::size_t blocks = 0;
  for (std::size_t m : {1, 2, 3, 4, 6})
    for (std::size_t f : {1, 2, 3, 4}) {
      const std::size_t heads = 1 + rng.below(3);
      const TD table = normal_tensor({heads, mrpe::bias_table_size(m)}, rng);
      const TD bimg = mrpe::build_b_img(VD(table), m).value();
      const TD bvid = mrpe::tile_to_video(VD(bimg), f).value();
      const std::size_t l = m * m;
      if (bvid.shape() != Shape{heads, f * l, f * l}) return fail("B_video shape");
      for (std::size_t hd = 0; hd < heads; ++hd)
        for (std::size_t f1 = 0; f1 < f; ++f1)
          for (std::size_t f2 = 0; f2 < f; ++f2) {
            for (std::size_t i = 0; i < l; ++i)
              for (std::size_t j = 0; j < l; ++j)
                if (bvid[(hd * f * l + f1 * l + i) * f * l + f2 * l + j] !=
                    bimg[(hd * l + i) * l + j])
                  return fail("block (" + std::to_string(f1) + "," + std::to_string(f2) +
                              ") differs from B_img at M" + std::to_string(m));
            ++blocks;
          }
    }
  return pass(std::to_string(blocks) + " (f1,f2) blocks equal B_img exactly");
}

// ---------------------------------------------------------------------------
// 3. gradients

// Central differences on sampled coordinates of parameter tensors, with the
// relative error of fd_check. Some gradients are exactly zero by symmetry (a
// key bias shifts every logit of a softmax row equally). There the quotient
// is rounding noise and a relative error means nothing, so such coordinates
// are counted separately: analytic below 1e-12 and the quotient below
// 1000 eps |L| / step.
struct ParamFd {
  double worst = 0;
  std::size_t checked = 0, zero = 0;
};

ParamFd param_fd(const std::function<VD()>& loss, const std::vector<VD>& params,
                 std::size_t per_tensor, double step, Rng& rng) {
  const VD l0 = loss();
  const double noise = 1000 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(l0.item())) / step;
  const auto analytic = grad<double>(l0, params, Unreachable::kZero);
  ParamFd out;
  for (std::size_t p = 0; p < params.size(); ++p) {
    VD v = params[p];
    for (std::size_t k = 0; k < std::min(per_tensor, v.value().size()); ++k) {
      const std::size_t i = rng.below(v.value().size());
      const double orig = v.value()[i];
      double fp, fm;
      {
        NoGradGuard ng;
        v.mutable_value()[i] = orig + step;
        fp = loss().item();
        v.mutable_value()[i] = orig - step;
        fm = loss().item();
        v.mutable_value()[i] = orig;
      }
      const double num = (fp - fm) / (2 * step), a = analytic[p][i];
      ++out.checked;
      if (std::abs(a) < 1e-12 && std::abs(num) < noise) {
        ++out.zero;
        continue;
      }
      out.worst = std::max(out.worst, std::abs(a - num) /
                                          std::max({std::abs(a), std::abs(num), 1e-8}));
    }
  }
  return out;
}

Outcome gradient_soundness() {
  Rng rng(303);
  std::ostringstream det;
  double worst = 0;
  const auto note = [&](const char* what, double e) {
    worst = std::max(worst, e);
    det << what << " " << fmt("%.1e", e);
  };

  {  // (a) attention with bias, gradient w.r.t. q, k, v and the bias.
    const std::size_t nw = 2, len = 8, c = 8, heads = 2;
    const TD q = normal_tensor({nw, len, c}, rng), k = normal_tensor({nw, len, c}, rng),
             v = normal_tensor({nw, len, c}, rng), b = normal_tensor({heads, len, len}, rng),
             w = normal_tensor({nw, len, c}, rng);
    const auto at = [&](const VD& qq, const VD& kk, const VD& vv, const VD& bb) {
      return ops::weighted_sum(ops::multihead_attention(qq, kk, vv, bb, heads), w);
    };
    double e = 0;
    e = std::max(e, fd_check([&](const VD& x) { return at(x, VD(k), VD(v), VD(b)); }, q, 1e-5)
                        .max_rel_error);
    e = std::max(e, fd_check([&](const VD& x) { return at(VD(q), x, VD(v), VD(b)); }, k, 1e-5)
                        .max_rel_error);
    e = std::max(e, fd_check([&](const VD& x) { return at(VD(q), VD(k), x, VD(b)); }, v, 1e-5)
                        .max_rel_error);
    e = std::max(e, fd_check([&](const VD& x) { return at(VD(q), VD(k), VD(v), x); }, b, 1e-5)
                        .max_rel_error);
    note("attention", e);
    det << ", ";
  }
  {  // (b) add_frame_pe, w.r.t. the video and the table.
    const TD x = normal_tensor({2, 3, 4, 4, 5}, rng), t = normal_tensor({3, 5}, rng),
             w = normal_tensor({2, 3, 4, 4, 5}, rng);
    double e = fd_check([&](const VD& a) { return ops::weighted_sum(mrpe::add_frame_pe(a, VD(t)), w); },
                        x, 1e-5)
                   .max_rel_error;
    e = std::max(e, fd_check([&](const VD& a) {
                      return ops::weighted_sum(mrpe::add_frame_pe(VD(x), a), w);
                    },
                    t, 1e-5)
                        .max_rel_error);
    note("add_frame_pe", e);
    det << ", ";
  }
  const unet::UNetConfig micro = unet::micro_config();
  {  // (c) one block at the micro config's deepest stage, every input coordinate.
    const auto stages = unet::encode_decode_shapes(micro);
    const auto st = *std::find_if(stages.begin(), stages.end(),
                                  [](const unet::StageShape& x) { return x.path == "middle"; });
    const std::size_t c = st.channels, h = st.height, wd = st.width, f = micro.frames;
    const std::size_t temb_dim = 4 * micro.stage_channels.front();
    nn::ParamSet<double> ps;
    Rng init(304);
    auto blk = wtsa::BlockParams<double>::make(ps, "blk", c, c, f, temb_dim, micro.groups,
                                               micro.window_sizes, init);
    for (const auto& p : ps.items()) {  // zero-initialised tensors would hide paths
      VD v = p.var;
      for (double& x : v.mutable_value().data()) x += rng.normal(0, 0.1);
    }
    const TD temb = normal_tensor({1, temb_dim}, rng), w = normal_tensor({1, f, h, wd, c}, rng);
    const auto fwd = [&](const VD& x) {
      return ops::weighted_sum(block_forward(x, VD(temb), blk, wtsa::AblationFlags{}), w);
    };
    const TD x = normal_tensor({1, f, h, wd, c}, rng);
    const FdReport r = fd_check(fwd, x, 1e-5);
    std::vector<VD> params;
    for (const auto& p : ps.items()) params.push_back(p.var);
    const ParamFd ep = param_fd([&] { return fwd(VD(x)); }, params, 6, 1e-5, rng);
    note("block_forward", std::max(r.max_rel_error, ep.worst));
    det << " (" << r.coords_checked << " input coords, " << ep.checked << " parameter coords of which "
        << ep.zero << " exactly zero), ";
  }
  {  // (d) denoise on the micro config.
    unet::UNet<double> net(micro, 305);
    for (const auto& p : net.parameters().items())
      if (p.kind == nn::ParamKind::kFramePE || p.name.rfind("out.conv", 0) == 0) {
        VD v = p.var;
        for (double& x : v.mutable_value().data()) x = rng.normal(0, 0.1);
      }
    const Shape s{1, micro.frames, micro.height, micro.width, 3};
    const TD y = normal_tensor(s, rng), w = normal_tensor(s, rng), x = normal_tensor(s, rng);
    const auto fwd = [&](const VD& xt) { return ops::weighted_sum(net.denoise(xt, VD(y), {250}), w); };
    const FdReport r = fd_check(fwd, x, 1e-5, 800, 306);
    std::vector<VD> params;
    for (const auto& p : net.parameters().items()) params.push_back(p.var);
    const ParamFd ep = param_fd([&] { return fwd(VD(x)); }, params, 2, 1e-5, rng);
    note("denoise", std::max(r.max_rel_error, ep.worst));
    det << " (" << r.coords_checked << " input coords, " << ep.checked << " parameter coords of which "
        << ep.zero << " exactly zero); ";
  }
  det << "max " << fmt("%.2e", worst) << " < 1e-4";
  return verdict(worst < 1e-4, det.str());
}

// ---------------------------------------------------------------------------
// 4. schedule and forward process

Outcome schedule_checks() {
  const auto s = diffusion::Schedule::linear(1000, 1e-6, 1e-2);
  std::ostringstream det;
  bool ok = s.steps() == 1000 && s.beta(1) == 1e-6 && std::abs(s.beta(1000) - 1e-2) < 1e-18;
  double max_dev = 0, prod = 1;
  for (std::size_t t = 1; t <= 1000; ++t) {
    if (t > 1 && !(s.beta(t) > s.beta(t - 1))) ok = false;
    if (!(s.alpha_bar(t) < s.alpha_bar(t - 1))) ok = false;
    prod *= 1.0 - (1e-6 + (1e-2 - 1e-6) * double(t - 1) / 999.0);
    max_dev = std::max(max_dev, std::abs(s.alpha_bar(t) - prod));
  }
  ok = ok && max_dev <= 1e-12;
  det << "beta increasing, alpha_bar decreasing, |alpha_bar - cumprod| " << fmt("%.1e", max_dev);

  // Marginal of q(x_t | x0) for fixed x0 over 10^4 draws.
  Rng rng(404);
  const std::size_t n = 10000;
  double worst = 0;
  for (std::size_t t : {1, 100, 500, 1000}) {
    const TD x0({n}, std::vector<double>(n, 0.6));
    const TD eps = normal_tensor({n}, rng);
    const TD xt = diffusion::q_sample(x0, t, eps, s);
    double m = 0, m2 = 0;
    for (double v : xt.data()) m += v / n;
    for (double v : xt.data()) m2 += (v - m) * (v - m) / (n - 1);
    const double want_m = std::sqrt(s.alpha_bar(t)) * 0.6, want_v = 1 - s.alpha_bar(t);
    // Relative for the variance; the mean is judged against the spread.
    worst = std::max({worst, std::abs(m2 - want_v) / want_v,
                      std::abs(m - want_m) / std::max(std::abs(want_m), std::sqrt(want_v))});
  }
  det << "; q_sample moments within " << fmt("%.2f", 100 * worst) << "% (limit 2%)";
  return verdict(ok && worst < 0.02, det.str());
}

// ---------------------------------------------------------------------------
// 5. DDIM determinism on the desk config

cli::RunConfig desk_run_config() {
  cli::RunConfig cfg = cli::parse_config("", "<desk>");
  return cfg;
}

void perturb_output(training::TrainState<float>& st, std::uint64_t seed) {
  Rng rng(seed);
  for (const char* name : {"out.conv.w", "out.conv.b"}) {
    Var<float> v = st.net.parameters().at(name);
    for (float& x : v.mutable_value().data()) x = static_cast<float>(rng.normal(0, 0.02));
  }
}

Outcome ddim_determinism(const fs::path& work) {
  cli::RunConfig cfg = desk_run_config();
  cli::apply_override(cfg, "data.synth_clips=1");
  cli::apply_override(cfg, "data.synth_frames=4");
  training::TrainState<float> st(cfg.model, cfg.train);
  // An untrained output layer predicts zero noise; give it something to say.
  perturb_output(st, 505);
  const fs::path ckpt = work / "c5" / "checkpoint.bin";
  fs::create_directories(ckpt.parent_path());
  training::save_checkpoint(ckpt, st, cli::to_text(cfg), cli::config_hash(cfg));

  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    cli::SampleOptions o;
    o.checkpoint = ckpt.string();
    o.data.synthetic = true;
    o.sampler.sampler = "ddim";
    o.sampler.seed = 55;
    o.out = work / "c5" / run;
    cli::cmd_sample(o, sink);
  }
  std::size_t pngs = 0, same = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "c5" / "a"))
    if (e.path().extension() == ".png") {
      ++pngs;
      const fs::path twin = work / "c5" / "b" / fs::relative(e.path(), work / "c5" / "a");
      if (fs::exists(twin) && read_file(e.path()) == read_file(twin)) ++same;
    }
  const std::size_t steps = diffusion::ddim_timesteps(cfg.model.timesteps, cfg.eval.sampler.ddim_steps).size();
  return verdict(pngs == 4 && same == pngs && steps == 50,
                 std::to_string(same) + "/" + std::to_string(pngs) +
                     " PNGs bit-identical across two seeded runs; DDIM step list length " +
                     std::to_string(steps));
}

// ---------------------------------------------------------------------------
// 6, 7 and the trend half of 9: desk-scale training

struct LongResult {
  double gain_db = 0;  // restored PSNR minus blurry PSNR
  double full = 0, baseline = 0, win1 = 0;
  std::vector<double> sa_psnr, sa_fid;
};

const std::vector<std::size_t> kSaX{1, 2, 4, 8};

double median(std::vector<double> v) { return cli::median(std::move(v)); }

LongResult long_run(const cli::RunConfig& cfg, std::uint64_t seed, std::ostream& log) {
  const auto ds = data::make_synthetic(cfg.data.synth, cfg.data.synth_clips,
                                       cfg.data.synth_frames, cfg.data.synth_height,
                                       cfg.data.synth_width);
  training::TrainConfig tc = cfg.train;
  tc.seed = seed;
  const std::size_t tail = std::clamp<std::size_t>(tc.total_steps / 10, 1, 200);
  LongResult out;

  training::TrainState<float> st(cfg.model, tc);
  std::vector<double> losses;
  training::train<float>(st, ds, [&](const training::TrainState<float>& s,
                                     const training::StepResult& r) {
    losses.push_back(r.loss);
    if (s.step % 1000 == 0) log << "  seed " << seed << " full step " << s.step << " loss " << r.loss << "\n";
  });
  const std::size_t k = std::min(tail, losses.size());
  for (std::size_t i = losses.size() - k; i < losses.size(); ++i) out.full += losses[i] / k;

  const metrics::RandomProjectionExtractor fx(cfg.eval.feature_dim, cfg.eval.feature_seed);
  for (std::size_t x : kSaX) {
    auto sc = cfg.eval.sampler;
    sc.seed = seed * 1000;
    const auto restored = training::restore(st.net, ds, st.schedule, sc, x);
    const auto rep = training::score(restored, ds, cfg.eval.patches, fx);
    if (x == 1) out.gain_db = rep.mean_psnr - rep.mean_blur_psnr;
    out.sa_psnr.push_back(rep.mean_psnr);
    out.sa_fid.push_back(rep.fid);
    log << "  seed " << seed << " SA-" << x << " psnr " << rep.mean_psnr << " (input "
        << rep.mean_blur_psnr << ") fid " << rep.fid << "\n";
  }
  out.baseline = training::ablation_run(training::module_variants().front(), cfg.model, tc, ds,
                                        tail, nullptr)
                     .final_loss;
  out.win1 = training::ablation_run(training::window_variants().front(), cfg.model, tc, ds, tail,
                                    nullptr)
                 .final_loss;
  log << "  seed " << seed << " final loss full " << out.full << " baseline " << out.baseline
      << " windows1111 " << out.win1 << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// 8. metric oracles

Outcome metric_oracles() {
  std::ostringstream det;
  bool ok = true;
  Rng rng(808);
  // FID of a set with itself.
  metrics::FeatureSet a(500, 8);
  for (double& v : a.values) v = rng.normal(0, 1);
  const double self = metrics::fid(a, a);
  ok = ok && std::abs(self) <= 1e-6;
  det << "fid(S,S) " << fmt("%.1e", self);

  // Shifted standard Gaussians: FID -> |mu|^2.
  const std::vector<double> mu{1.0, -0.5, 0.5, 1.5};  // |mu|^2 = 3.75
  metrics::FeatureSet g1(10000, 4), g2(10000, 4);
  for (std::size_t i = 0; i < 10000; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      g1.row(i)[j] = rng.normal(0, 1);
      g2.row(i)[j] = mu[j] + rng.normal(0, 1);
    }
  const double shift = metrics::fid(g1, g2);
  ok = ok && std::abs(shift - 3.75) <= 0.05 * 3.75;
  det << "; shift fid " << fmt("%.4f", shift) << " vs 3.75";

  // KID against the O(n^2) double sum.
  const auto k = [](const double* x, const double* y, std::size_t d) {
    double dot = 0;
    for (std::size_t j = 0; j < d; ++j) dot += x[j] * y[j];
    return std::pow(dot / double(d) + 1, 3);
  };
  double kid_err = 0;
  for (std::size_t m : {2, 5, 16})
    for (std::size_t n : {3, 16}) {
      metrics::FeatureSet x(m, 6), y(n, 6);
      for (double& v : x.values) v = rng.normal(0, 1);
      for (double& v : y.values) v = rng.normal(0.3, 1.2);
      double xx = 0, yy = 0, xy = 0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          if (i != j) xx += k(x.row(i), x.row(j), 6);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) yy += k(y.row(i), y.row(j), 6);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (m != n || i != j) xy += k(x.row(i), y.row(j), 6);
      const double want = xx / double(m * (m - 1)) + yy / double(n * (n - 1)) -
                          2 * xy / double(m == n ? m * (m - 1) : m * n);
      kid_err = std::max(kid_err, std::abs(metrics::kid(x, y) - want) / std::max(1.0, std::abs(want)));
    }
  ok = ok && kid_err <= 1e-12 && metrics::kid_x1000(0.00125) == 1.25;
  det << "; kid vs double sum " << fmt("%.1e", kid_err) << ", x1000 scaling";

  // PSNR with a uniform error of 0.1.
  TD p({16, 16, 3}, std::vector<double>(768, 0.25)), q({16, 16, 3}, std::vector<double>(768, 0.35));
  const double db = metrics::psnr(p, q);
  ok = ok && std::abs(db - 20.0) <= 1e-9;
  det << "; psnr " << fmt("%.12f", db) << " dB";

  // 720x1280 frames in 240-pixel patches.
  const metrics::PatchSpec ps{240, 0};
  const std::size_t count = metrics::patch_count(720, 1280, ps);
  const std::size_t split = metrics::patch_split(Tensor<float>({720, 1280, 3}), ps).size();
  ok = ok && count == 15 && split == 15;
  det << "; " << split << " patches of 720x1280";
  return verdict(ok, det.str());
}

// ---------------------------------------------------------------------------
// 9. sample averaging

constexpr const char* kMicroRun = R"([model]
stage_channels = 8,16
frames = 2
height = 24
width = 24
[diffusion]
ddim_steps = 5
[train]
crop = 24
[data]
synth_clips = 1
synth_frames = 2
synth_height = 24
synth_width = 24
[eval]
patch_size = 8
)";

Outcome sa_contract(const fs::path& work) {
  const cli::RunConfig cfg = cli::parse_config(kMicroRun, "<micro>");
  training::TrainState<float> st(cfg.model, cfg.train);
  perturb_output(st, 909);
  const fs::path ckpt = work / "c9" / "checkpoint.bin";
  fs::create_directories(ckpt.parent_path());
  training::save_checkpoint(ckpt, st, cli::to_text(cfg), cli::config_hash(cfg));
  std::ostringstream det;
  bool ok = true;

  // SA-1 against a single sample, on the raw sampler.
  const auto ds = data::make_synthetic(cfg.data.synth, 1, 2, 24, 24);
  const Tensor<float> y = ds.clips()[0].blur.reshaped({1, 2, 24, 24, 3});
  auto sc = cfg.eval.sampler;
  sc.seed = 17;
  const auto eps = diffusion::denoiser_of(st.net);
  const bool sa1 = diffusion::sample_average(eps, y, st.schedule, sc, {17}) ==
                   diffusion::sample(eps, y, st.schedule, sc);
  ok = ok && sa1;
  det << "SA-1 == single sample: " << (sa1 ? "yes" : "no");

  // The tool: saved constituents, their mean, and the CSV.
  cli::SaCurveOptions o;
  o.checkpoint = ckpt.string();
  o.data.synthetic = true;
  o.x = {1, 2, 4};
  o.save_samples = true;
  o.out = work / "c9" / "sa";
  std::ostringstream sink;
  cli::cmd_sa_curve(o, sink);
  const fs::path root = o.out / "samples" / "base0";
  bool exact = true;
  for (std::size_t x : o.x) {
    const fs::path dir = root / ("sa" + std::to_string(x));
    const Tensor<float> avg = cli::read_tensor(dir / "average.vdbt");
    Tensor<float> acc = cli::read_tensor(dir / "sample0.vdbt");
    for (std::size_t k = 1; k < x; ++k) {
      const Tensor<float> s = cli::read_tensor(dir / ("sample" + std::to_string(k) + ".vdbt"));
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s[i];
    }
    for (float& v : acc.data()) v /= static_cast<float>(x);
    exact = exact && acc == avg;
  }
  // The first constituent is the seed-0 restoration.
  auto sc0 = cfg.eval.sampler;
  sc0.seed = 0;
  const bool first = training::restore(st.net, ds, st.schedule, sc0).clips()[0].blur ==
                     cli::read_tensor(root / "sa1" / "sample0.vdbt");
  ok = ok && exact && first;
  det << "; SA-x == mean of saved samples: " << (exact ? "yes" : "no")
      << "; SA-1 sample == direct restore: " << (first ? "yes" : "no");

  std::istringstream csv(read_file(o.out / "sa_curve.csv"));
  std::vector<std::string> rows;
  bool in_table = false;
  for (std::string line; std::getline(csv, line);) {
    if (line.rfind("x,", 0) == 0) in_table = true;
    else if (in_table && !line.empty()) rows.push_back(line.substr(0, line.find(',')));
  }
  const bool rows_ok = rows == std::vector<std::string>{"1", "2", "4"};
  ok = ok && rows_ok;
  det << "; CSV rows " << rows.size() << " for x = 1,2,4";
  return verdict(ok, det.str());
}

// ---------------------------------------------------------------------------
// 10. learning rate

Outcome lr_anchors() {
  const training::TrainConfig cfg;
  bool ok = training::lr_at(0, cfg) == 1e-6 && training::lr_at(5000, cfg) == 1e-4 &&
            training::lr_at(cfg.total_steps, cfg) == 1e-6;
  // Dense grid: no jump larger than the warmup slope.
  const double slope = (1e-4 - 1e-6) / 5000;
  double max_jump = 0;
  for (std::size_t s = 1; s <= cfg.total_steps; ++s)
    max_jump = std::max(max_jump, std::abs(training::lr_at(s, cfg) - training::lr_at(s - 1, cfg)));
  ok = ok && max_jump <= slope * (1 + 1e-9);
  return verdict(ok, "lr(0)=" + fmt("%g", training::lr_at(0, cfg)) + " lr(5000)=" +
                         fmt("%g", training::lr_at(5000, cfg)) + " lr(20000)=" +
                         fmt("%g", training::lr_at(cfg.total_steps, cfg)) +
                         "; max step change " + fmt("%.3e", max_jump) + " <= warmup slope");
}

// Seconds per desk training step, from a few real steps.
double measure_desk_step(std::size_t steps) {
  const cli::RunConfig cfg = desk_run_config();
  const auto ds = data::make_synthetic(cfg.data.synth, cfg.data.synth_clips,
                                       cfg.data.synth_frames, cfg.data.synth_height,
                                       cfg.data.synth_width);
  training::TrainState<float> st(cfg.model, cfg.train);
  training::train_next(st, ds);  // warm caches and allocator
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < steps; ++i) training::train_next(st, ds);
  return seconds_since(t0) / static_cast<double>(steps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool long_mode = false;
  std::vector<int> only;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t steps = 0;
  std::string work = (fs::temp_directory_path() / "vdb_acceptance").string();
  app.add_flag("--long", long_mode, "Run the desk-scale training criteria (6, 7, 9 trend)");
  app.add_option("--criteria", only, "Subset to run, e.g. --criteria 1 2 8")->take_all();
  app.add_option("--seeds", seeds, "Training seeds for --long")->take_all();
  app.add_option("--steps", steps,
                 "Shorter --long trainings for a dry run; results are then reported as INFO");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Config overrides for a --long dry run (reported as INFO)")
      ->take_all();
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(work);
  fs::create_directories(work);
  const std::set<int> wanted(only.begin(), only.end());
  const auto selected = [&](int n) { return wanted.empty() || wanted.count(n); };
  std::cout << "kernels " << kernels::isa_name(kernels::active_isa()) << "\n";

  std::map<int, std::pair<Outcome, double>> results;
  const auto run = [&](int n, const std::function<Outcome()>& fn) {
    if (!selected(n)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    results[n] = {o, seconds_since(t0)};
  };
  // Stated runtime limits, in seconds.
  const std::map<int, double> limit{{1, 10}, {2, 5}, {3, 300}, {4, 60}, {5, 120}, {8, 120}, {10, 1}};

  run(1, rearrangement);
  run(2, tiling_identity);
  run(3, gradient_soundness);
  run(4, schedule_checks);
  run(5, [&] { return ddim_determinism(work); });
  run(8, metric_oracles);
  run(9, [&] { return sa_contract(work); });
  run(10, lr_anchors);

  const cli::RunConfig desk = desk_run_config();
  const std::size_t total = steps ? steps : desk.train.total_steps;
  // Three trainings per seed: the full model, no WTSA, and 1x1 windows.
  const double runs = 3.0 * static_cast<double>(seeds.size());
  if (long_mode && (selected(6) || selected(7) || selected(9))) {
    cli::RunConfig cfg = desk;
    for (const auto& a : sets) cli::apply_override(cfg, a);
    if (steps) {
      cfg.train.total_steps = steps;
      cfg.train.warmup_steps = std::min(cfg.train.warmup_steps, steps / 4);
    }
    const auto t0 = Clock::now();
    std::vector<LongResult> lr;
    std::string error;
    try {
      for (std::uint64_t s : seeds) lr.push_back(long_run(cfg, s, std::cout));
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = seconds_since(t0);
    const bool reduced = steps != 0 || !sets.empty();
    const auto mark = [&](bool ok, std::string d) {
      Outcome o = verdict(ok, std::move(d));
      if (reduced) {
        o.status = Outcome::kNotRun;
        o.detail = "INFO only, reduced run (" + std::to_string(total) + " steps, " +
                   std::to_string(sets.size()) + " overrides): " + o.detail;
      }
      return o;
    };
    std::vector<double> gain, full, base, win1;
    for (const auto& r : lr) {
      gain.push_back(r.gain_db);
      full.push_back(r.full);
      base.push_back(r.baseline);
      win1.push_back(r.win1);
    }
    if (!error.empty()) {
      for (int n : {6, 7}) results[n] = {fail("exception: " + error), secs};
    } else {
      const double g = median(gain), f = median(full), b = median(base), w = median(win1);
      results[6] = {mark(g >= 3.0, "median PSNR gain over the blurry input " + fmt("%.3f", g) +
                                       " dB (need >= 3) over " + std::to_string(lr.size()) +
                                       " seeds, " + fmt("%.0f", secs) + "s for all long runs"),
                    secs};
      results[7] = {mark(f <= b && f <= w,
                         "median final loss joint-position " + fmt("%.6g", f) + " vs baseline " +
                             fmt("%.6g", b) + ", windows 6-4-3-2 " + fmt("%.6g", f) +
                             " vs 1-1-1-1 " + fmt("%.6g", w) +
                             " (published large-scale PSNR 32.089 vs 31.609 and 27.223 vs 27.016)"),
                    secs};
      std::vector<double> mp, mf;
      for (std::size_t i = 0; i < kSaX.size(); ++i) {
        std::vector<double> p, q;
        for (const auto& r : lr) {
          p.push_back(r.sa_psnr[i]);
          q.push_back(r.sa_fid[i]);
        }
        mp.push_back(median(p));
        mf.push_back(median(q));
      }
      const bool up = std::is_sorted(mp.begin(), mp.end());
      const bool fid_up = std::is_sorted(mf.begin(), mf.end());
      std::string trend = "SA-1/2/4/8 median psnr";
      for (double v : mp) trend += " " + fmt("%.3f", v);
      trend += ", fid";
      for (double v : mf) trend += " " + fmt("%.4g", v);
      if (results.count(9)) {
        Outcome& o = results[9].first;
        const Outcome t = mark(up && fid_up, trend);
        o.detail += "; trend: " + t.detail;
        if (t.status == Outcome::kFail) o.status = Outcome::kFail;
      }
    }
  } else {
    // Projection only.
    const double per_step = measure_desk_step(2);
    const double hours = per_step * static_cast<double>(total) * runs / 3600.0;
    const std::string why = "needs " + fmt("%.0f", runs) + " desk trainings of " +
                            std::to_string(total) + " steps; measured " +
                            fmt("%.2f", per_step) + " s/step here, projected " +
                            fmt("%.1f", hours) + " h against a 4 h budget. Run with --long";
    for (int n : {6, 7})
      if (selected(n)) results[n] = {{Outcome::kNotRun, why}, 0.0};
    if (results.count(9))
      results[9].first.detail += "; 3-seed trend needs the trained desk models (--long)";
  }

  int failures = 0;
  for (int n = 1; n <= 10; ++n) {
    const auto it = results.find(n);
    if (it == results.end()) continue;
    Outcome o = it->second.first;
    const double secs = it->second.second;
    const auto lim = limit.find(n);
    if (o.status == Outcome::kPass && lim != limit.end() && secs > lim->second) {
      o.status = Outcome::kFail;
      o.detail += "; over the " + fmt("%.0f", lim->second) + " s limit";
    }
    const char* tag = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kFail ? "FAIL" : "NOT RUN";
    if (o.status == Outcome::kFail) ++failures;
    std::cout << tag << " criterion " << n << ": " << o.detail << " (" << fmt("%.2f", secs)
              << "s)\n";
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " failed" : "acceptance: ok")
            << "\n";
  return failures ? 1 : 0;
}
