// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// vdeblur: train, sample, evaluate and inspect the video deblurring model.

#include <CLI11.hpp>
#include <iostream>

#include "vdb/commands.hpp"
#include "vdb/errors.hpp"

namespace {

using namespace vdb::cli;

void add_config(CLI::App* app, ConfigSource& c) {
  app->add_option("-c,--config", c.path, "Run configuration file (default: desk config)");
  app->add_option("-s,--set", c.overrides, "Override, e.g. --set train.crop=48")
      ->take_all();
}

void add_data(CLI::App* app, DataSource& d) {
  app->add_option("--data", d.root, "Dataset root (overrides [data] root)");
  app->add_flag("--synthetic", d.synthetic, "Use the synthetic set from [data]");
}

void add_sampler(CLI::App* app, SamplerOverrides& s) {
  app->add_option("--sampler", s.sampler, "ddpm or ddim")
      ->check(CLI::IsMember({"ddpm", "ddim"}));
  app->add_option("--steps", s.steps, "DDIM steps");
  app->add_option("--seed", s.seed, "Sampling seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video deblurring with a window-attention diffusion model"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a model; writes checkpoint.bin and loss.csv");
  add_config(t, train.config);
  add_data(t, train.data);
  t->add_option("--steps", train.steps, "Total steps (overrides [train] total_steps)");
  t->add_option("--seed", train.seed, "Training seed");
  t->add_option("--ablate", train.ablate, "Switches, e.g. wtsa=off or mpe=off,rpb=off");
  t->add_option("-o,--out", train.out, "Output directory");
  t->add_option("--resume", train.resume, "Continue from a checkpoint");

  SampleOptions sample;
  auto* s = app.add_subcommand("sample", "Restore clips and write PNG frames");
  s->add_option("--checkpoint", sample.checkpoint)->required();
  add_data(s, sample.data);
  add_sampler(s, sample.sampler);
  s->add_option("-o,--out", sample.out, "Output directory");

  EvaluateOptions eval;
  std::string mode = "model";
  auto* e = app.add_subcommand("evaluate", "Score restorations: PSNR, SSIM, FID, KID");
  e->add_option("--checkpoint", eval.checkpoint);
  add_config(e, eval.config);
  add_data(e, eval.data);
  add_sampler(e, eval.sampler);
  e->add_option("--mode", mode, "model, identity (sharp vs sharp) or blurry (input vs sharp)")
      ->check(CLI::IsMember({"model", "identity", "blurry"}));
  e->add_option("--patch", eval.patch, "Patch size for FID/KID");
  e->add_option("-o,--out", eval.out, "CSV path");

  SaCurveOptions sa;
  auto* c = app.add_subcommand("sa-curve", "Metrics of SA-x sample averages versus x");
  c->add_option("--checkpoint", sa.checkpoint)->required();
  add_data(c, sa.data);
  add_sampler(c, sa.sampler);
  c->add_option("-x,--x", sa.x, "Sample counts, e.g. -x 1 2 4 8")->take_all();
  c->add_option("--base-seeds", sa.base_seeds, "Independent repetitions")->take_all();
  c->add_flag("--save-samples", sa.save_samples, "Keep constituent samples as .vdbt");
  c->add_option("-o,--out", sa.out, "Output directory");

  AblateOptions ab;
  auto* a = app.add_subcommand("ablate", "Train the module and window-size variants");
  add_config(a, ab.config);
  add_data(a, ab.data);
  a->add_option("--suite", ab.suite, "modules, windows or all")
      ->check(CLI::IsMember({"modules", "windows", "all"}));
  a->add_option("--seeds", ab.seeds, "Training seeds")->take_all();
  a->add_option("--steps", ab.steps, "Steps per run");
  a->add_flag("--evaluate", ab.evaluate, "Also sample and score each run");
  a->add_option("-o,--out", ab.out, "Output directory");

  InspectOptions ins;
  auto* i = app.add_subcommand("inspect", "Print shapes, parameter counts and config hash");
  add_config(i, ins.config);
  i->add_option("--checkpoint", ins.checkpoint);

  MakeSyntheticOptions ms;
  auto* m = app.add_subcommand("make-synthetic", "Write the synthetic dataset as PNGs");
  add_config(m, ms.config);
  m->add_option("-o,--out", ms.out, "Dataset root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*t) return cmd_train(train, std::cout);
    if (*s) return cmd_sample(sample, std::cout);
    if (*e) {
      eval.mode = mode == "identity" ? EvalMode::kIdentity
                  : mode == "blurry" ? EvalMode::kBlurry
                                     : EvalMode::kModel;
      return cmd_evaluate(eval, std::cout);
    }
    if (*c) return cmd_sa_curve(sa, std::cout);
    if (*a) return cmd_ablate(ab, std::cout);
    if (*i) return cmd_inspect(ins, std::cout);
    if (*m) return cmd_make_synthetic(ms, std::cout);
  } catch (const vdb::NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const vdb::UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const vdb::ShapeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const vdb::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
