// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "vdb/diffusion.hpp"
#include "vdb/ops.hpp"
#include "vdb/unet.hpp"

namespace vdb::diffusion {
namespace {

using test::random_tensor;
using test::uniform_tensor;
using TD = Tensor<double>;
using V = Var<double>;

TEST(Schedule, EndpointsAndLinearity) {
  const Schedule s = Schedule::linear();
  EXPECT_EQ(s.steps(), 1000u);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-6);
  EXPECT_DOUBLE_EQ(s.beta(1000), 1e-2);
  for (std::size_t t = 2; t < 1000; ++t)
    EXPECT_NEAR(s.beta(t + 1) - s.beta(t), s.beta(t) - s.beta(t - 1), 1e-15);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  EXPECT_THROW(s.beta(0), UsageError);
  EXPECT_THROW(s.alpha_bar(1001), UsageError);
}

TEST(Schedule, MonotoneAndInUnitInterval) {
  const Schedule s = Schedule::linear();
  for (std::size_t t = 1; t <= 1000; ++t) {
    EXPECT_GT(s.beta(t), 0.0);
    EXPECT_LT(s.beta(t), 1.0);
    if (t > 1) EXPECT_GT(s.beta(t), s.beta(t - 1));
    EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
  }
}

TEST(Schedule, AlphaBarMatchesProductOfLogs) {
  const Schedule s = Schedule::linear();
  double log_sum = 0;
  for (std::size_t t = 1; t <= 1000; ++t) {
    const double beta = 1e-6 + (1e-2 - 1e-6) * double(t - 1) / 999.0;
    log_sum += std::log1p(-beta);
    EXPECT_NEAR(s.alpha_bar(t), std::exp(log_sum), 1e-12) << t;
  }
}

TEST(Schedule, PosteriorVariance) {
  const Schedule s = Schedule::linear();
  EXPECT_EQ(s.posterior_variance(1), 0.0);
  for (std::size_t t : {2u, 10u, 500u, 1000u}) {
    const double want =
        s.beta(t) * (1 - s.alpha_bar(t - 1)) / (1 - s.alpha_bar(t));
    EXPECT_DOUBLE_EQ(s.posterior_variance(t), want);
    EXPECT_LE(s.posterior_variance(t), s.beta(t));
  }
}

TEST(Schedule, InvalidArguments) {
  EXPECT_THROW(Schedule::linear(0), UsageError);
  EXPECT_THROW(Schedule::linear(10, 0.0, 0.1), UsageError);
  EXPECT_THROW(Schedule::linear(10, 0.2, 0.1), UsageError);
  EXPECT_THROW(Schedule::linear(10, 0.1, 1.0), UsageError);
}

TEST(QSample, BoundaryAndZeroSignal) {
  const Schedule s = Schedule::linear();
  Rng rng(1);
  const TD x0 = random_tensor({2, 3, 3}, rng), eps = random_tensor({2, 3, 3}, rng);
  EXPECT_EQ(q_sample(x0, 0, eps, s), x0);
  const TD zero({2, 3, 3});
  const TD xt = q_sample(zero, 400, eps, s);
  for (std::size_t i = 0; i < eps.size(); ++i)
    EXPECT_EQ(xt[i], std::sqrt(1 - s.alpha_bar(400)) * eps[i]);
  EXPECT_THROW(q_sample(x0, 1001, eps, s), UsageError);
  EXPECT_THROW(q_sample(x0, 3, random_tensor({2, 9}, rng), s), ShapeError);
}

TEST(QSample, PerItemTimesteps) {
  const Schedule s = Schedule::linear();
  Rng rng(2);
  const TD x0 = random_tensor({2, 4}, rng), eps = random_tensor({2, 4}, rng);
  const TD both = q_sample(x0, {5, 900}, eps, s);
  const TD a = q_sample(x0, 5, eps, s), b = q_sample(x0, 900, eps, s);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(both[i], a[i]);
    EXPECT_EQ(both[4 + i], b[4 + i]);
  }
  EXPECT_THROW(q_sample(x0, std::vector<std::size_t>{5}, eps, s), ShapeError);
}

TEST(QSample, MonteCarloVarianceAtFinalStep) {
  const Schedule s = Schedule::linear();
  Rng rng(3);
  const std::size_t n = 100000;
  const TD x0 = TD::full({n}, 0.3);
  const TD xt = q_sample(x0, 1000, random_tensor({n}, rng), s);
  double m = 0, v = 0;
  for (double x : xt.data()) m += x / n;
  for (double x : xt.data()) v += (x - m) * (x - m) / (n - 1);
  EXPECT_NEAR(v, 1 - s.alpha_bar(1000), 0.02 * (1 - s.alpha_bar(1000)));
  EXPECT_NEAR(m, 0.3 * std::sqrt(s.alpha_bar(1000)), 0.01);
}

TEST(QSample, ComposedSingleStepsMatchClosedForm) {
  const Schedule s = Schedule::linear();
  Rng rng(4);
  const std::size_t n = 20000, steps = 300;
  const double x0 = 0.8;
  double m = 0, m2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double x = x0;
    for (std::size_t t = 1; t <= steps; ++t)
      x = std::sqrt(s.alpha(t)) * x + std::sqrt(s.beta(t)) * rng.normal();
    m += x / n;
    m2 += x * x / n;
  }
  const double want_mean = std::sqrt(s.alpha_bar(steps)) * x0;
  const double want_var = 1 - s.alpha_bar(steps);
  EXPECT_NEAR(m, want_mean, 0.02 * want_mean);
  EXPECT_NEAR(m2 - m * m, want_var, 0.02 * want_var);
}

TEST(Range, RoundTripAndClamp) {
  const TD img({4}, {0.0, 0.25, 1.0, 0.5});
  const TD x = to_model_range(img);
  EXPECT_EQ(x, TD({4}, {-1.0, -0.5, 1.0, 0.0}));
  EXPECT_EQ(from_model_range(x), img);
  EXPECT_EQ(from_model_range(TD({2}, {-3.0, 2.0})), TD({2}, {0.0, 1.0}));
}

TEST(Loss, ZeroInitNetworkGivesUnitLoss) {
  const Schedule s = Schedule::linear();
  const unet::UNet<double> net(unet::micro_config(), 1);
  Rng rng(5);
  const TD y = uniform_tensor({3, 2, 24, 24, 3}, rng);
  const TD x0 = uniform_tensor({3, 2, 24, 24, 3}, rng);
  ASSERT_GE(x0.size(), 10000u);
  const double loss = training_loss(net, y, x0, s, rng).item();
  EXPECT_GE(loss, 0.0);
  EXPECT_NEAR(loss, 1.0, 0.05);
}

TEST(Loss, DrawIsReplayableAndInRange) {
  const Schedule s = Schedule::linear();
  Rng a(6), b(6);
  const auto d1 = draw_loss<double>({5, 2, 3}, s, a);
  const auto d2 = draw_loss<double>({5, 2, 3}, s, b);
  EXPECT_EQ(d1.t, d2.t);
  EXPECT_EQ(d1.eps, d2.eps);
  for (std::size_t t : d1.t) {
    EXPECT_GE(t, 1u);
    EXPECT_LE(t, 1000u);
  }
}

TEST(Loss, GradientStepOnFrozenBatchDecreasesLoss) {
  const Schedule s = Schedule::linear();
  unet::UNet<double> net(unet::micro_config(), 2);
  Rng rng(7);
  const TD y = uniform_tensor({1, 2, 24, 24, 3}, rng);
  const TD x0 = uniform_tensor({1, 2, 24, 24, 3}, rng);
  const auto draw = draw_loss<double>(x0.shape(), s, rng);
  const V loss = training_loss(net, y, x0, s, draw);
  const auto params = net.trainable_parameters();
  const auto g = grad<double>(loss, params, Unreachable::kZero);
  for (std::size_t i = 0; i < params.size(); ++i) {
    V p = params[i];
    for (std::size_t j = 0; j < p.size(); ++j) p.mutable_value()[j] -= 0.05 * g[i][j];
  }
  const double after = training_loss(net, y, x0, s, draw).item();
  EXPECT_LT(after, loss.item());
}

// eps prediction that is exact when x0 ~ N(mu, sd^2) independently per pixel:
// E[eps | x_t] = sqrt(1 - a) (x_t - sqrt(a) mu) / (a sd^2 + 1 - a).
Denoiser<double> gaussian_denoiser(const Schedule& s, double sd) {
  return [&s, sd](const TD& x, const TD& y, std::size_t t) {
    const double a = s.alpha_bar(t);
    TD e(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
      e[i] = std::sqrt(1 - a) * (x[i] - std::sqrt(a) * y[i]) / (a * sd * sd + 1 - a);
    return e;
  };
}

TEST(Ddim, TimestepSubsequence) {
  const auto ts = ddim_timesteps(1000, 50);
  ASSERT_EQ(ts.size(), 50u);
  EXPECT_EQ(ts.front(), 20u);
  EXPECT_EQ(ts.back(), 1000u);
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_GT(ts[i], ts[i - 1]);
  const auto all = ddim_timesteps(1000, 1000);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(all[i], i + 1);
  EXPECT_EQ(ddim_timesteps(1000, 3), (std::vector<std::size_t>{333, 666, 1000}));
  EXPECT_THROW(ddim_timesteps(1000, 0), UsageError);
  EXPECT_THROW(ddim_timesteps(1000, 1001), UsageError);
}

TEST(Ddim, SameSeedIsBitIdenticalWithNetwork) {
  const Schedule s = Schedule::linear();
  unet::UNet<double> net(unet::micro_config(), 3);
  Rng rng(8);
  for (const char* name : {"out.conv.w", "out.conv.b"}) {
    V p = net.parameters().at(name);
    for (double& v : p.mutable_value().data()) v = rng.normal(0, 0.05);
  }
  const TD y = uniform_tensor({2, 24, 24, 3}, rng);
  SamplerConfig cfg;
  cfg.ddim_steps = 10;
  cfg.seed = 42;
  const TD a = sample_ddim(denoiser_of(net), y, s, cfg);
  const TD b = sample_ddim(denoiser_of(net), y, s, cfg);
  EXPECT_EQ(a, b);
  cfg.seed = 43;
  EXPECT_NE(a, sample_ddim(denoiser_of(net), y, s, cfg));
}

TEST(Ddim, FullAndStridedChainsStayInRange) {
  const Schedule s = Schedule::linear();
  Rng rng(9);
  const TD y = uniform_tensor({2, 4, 4, 3}, rng);
  for (std::size_t steps : {50u, 1000u}) {
    SamplerConfig cfg;
    cfg.ddim_steps = steps;
    cfg.seed = 1;
    const TD out = sample_ddim(gaussian_denoiser(s, 0.1), y, s, cfg);
    EXPECT_TRUE(out.all_finite());
    for (double v : out.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Ddim, RecoversGaussianDataDistribution) {
  // With the exact denoiser the deterministic sampler maps N(0, 1) noise to
  // samples whose spread matches the data distribution. Coarse strides
  // under-disperse, so the full-length chain is used.
  const Schedule s = Schedule::linear();
  Rng rng(10);
  const std::size_t n = 4000;
  const TD y = TD::full({n}, 0.5);
  SamplerConfig cfg;
  cfg.clip_denoised = false;
  cfg.ddim_steps = 1000;
  cfg.seed = 11;
  const TD out = sample_ddim(gaussian_denoiser(s, 0.1), y, s, cfg);
  double m = 0, v = 0;
  for (double x : out.data()) m += x / n;
  for (double x : out.data()) v += (x - m) * (x - m) / n;
  // y = 0.5 is mu = 0 in model range; sd 0.1 there is 0.05 in image range.
  EXPECT_NEAR(m, 0.5, 0.005);
  EXPECT_NEAR(std::sqrt(v), 0.05, 0.005);
}

TEST(Sampler, SingleStepChainMatchesPosteriorMean) {
  // T = 1: x_0 = (x_1 - sqrt(1 - abar) eps) / sqrt(abar), no noise added.
  const Schedule s = Schedule::linear(1, 0.02, 0.02);
  Rng rng(12);
  const TD y = uniform_tensor({3, 2, 2}, rng);
  const Denoiser<double> eps = [](const TD& x, const TD& cond, std::size_t) {
    TD e(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = 0.4 * x[i] - 0.2 * cond[i];
    return e;
  };
  Rng noise(77);
  TD want(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x1 = noise.normal();
    const double e = 0.4 * x1 - 0.2 * (2 * y[i] - 1);
    const double x0 = (x1 - std::sqrt(0.02) * e) / std::sqrt(0.98);
    want[i] = std::clamp((x0 + 1) / 2, 0.0, 1.0);
  }
  for (SamplerKind kind : {SamplerKind::kDdpm, SamplerKind::kDdim}) {
    SamplerConfig cfg{kind, 1, 77, false};
    const TD got = sample(eps, y, s, cfg);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-14) << to_string(kind);
  }
}

TEST(Sampler, DdpmIsSeedDeterministicAndInRange) {
  const Schedule s = Schedule::linear(100, 1e-4, 0.05);
  Rng rng(13);
  const TD y = uniform_tensor({3, 3, 3}, rng);
  SamplerConfig cfg{SamplerKind::kDdpm, 50, 5, true};
  const TD a = sample(gaussian_denoiser(s, 0.1), y, s, cfg);
  EXPECT_EQ(a, sample(gaussian_denoiser(s, 0.1), y, s, cfg));
  for (double v : a.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Sampler, NonFiniteStateNamesStep) {
  const Schedule s = Schedule::linear(10, 1e-3, 1e-2);
  const Denoiser<double> bad = [](const TD& x, const TD&, std::size_t t) {
    TD e(x.shape());
    if (t == 7) e[0] = std::numeric_limits<double>::quiet_NaN();
    return e;
  };
  SamplerConfig cfg{SamplerKind::kDdpm, 10, 0, true};
  try {
    sample(bad, TD({2, 2}), s, cfg);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("t=7"), std::string::npos) << e.what();
  }
}

TEST(Sampler, ParseNames) {
  EXPECT_EQ(parse_sampler("ddim"), SamplerKind::kDdim);
  EXPECT_EQ(parse_sampler("ddpm"), SamplerKind::kDdpm);
  EXPECT_EQ(to_string(SamplerKind::kDdpm), "ddpm");
  EXPECT_THROW(parse_sampler("euler"), UsageError);
}

TEST(SampleAverage, OneSampleEqualsSampler) {
  const Schedule s = Schedule::linear();
  Rng rng(14);
  const TD y = uniform_tensor({2, 3, 3}, rng);
  SamplerConfig cfg;
  cfg.seed = 9;
  const auto eps = gaussian_denoiser(s, 0.2);
  EXPECT_EQ(sample_average(eps, y, s, cfg, {9}), sample_ddim(eps, y, s, cfg));
}

TEST(SampleAverage, IsExactArithmeticMean) {
  const Schedule s = Schedule::linear();
  Rng rng(15);
  const TD y = uniform_tensor({2, 3, 3}, rng);
  const auto eps = gaussian_denoiser(s, 0.2);
  std::vector<TD> parts;
  const TD avg = sample_average(eps, y, s, SamplerConfig{}, {3, 4}, &parts);
  ASSERT_EQ(parts.size(), 2u);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(avg[i], (parts[0][i] + parts[1][i]) / 2);
  EXPECT_EQ(mean_of<double>({TD({2}, {1, 2}), TD({2}, {3, 6}), TD({2}, {5, 1})}),
            TD({2}, {3, 3}));
  EXPECT_THROW(sample_average(eps, y, s, SamplerConfig{}, {3, 3}), UsageError);
  EXPECT_THROW(sample_average(eps, y, s, SamplerConfig{}, {}), UsageError);
}

TEST(SampleAverage, AveragingShrinksPerPixelVariance) {
  const Schedule s = Schedule::linear();
  Rng rng(16);
  const TD y = uniform_tensor({1, 4, 4, 3}, rng, 0.3, 0.7);
  const auto eps = gaussian_denoiser(s, 0.2);
  SamplerConfig cfg;
  cfg.ddim_steps = 20;
  const std::size_t reps = 24;
  std::vector<TD> sa1, sa8;
  std::uint64_t next = 1000;
  for (std::size_t r = 0; r < reps; ++r) {
    sa1.push_back(sample_average(eps, y, s, cfg, {next++}));
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < 8; ++k) seeds.push_back(next++);
    sa8.push_back(sample_average(eps, y, s, cfg, seeds));
  }
  const auto mean_variance = [&](const std::vector<TD>& xs) {
    double total = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      double m = 0, v = 0;
      for (const TD& x : xs) m += x[i] / reps;
      for (const TD& x : xs) v += (x[i] - m) * (x[i] - m) / (reps - 1);
      total += v / y.size();
    }
    return total;
  };
  const double v1 = mean_variance(sa1), v8 = mean_variance(sa8);
  EXPECT_LE(v8, v1);
  EXPECT_LT(v8, 0.3 * v1);  // ideal ratio 1/8
}

}  // namespace
}  // namespace vdb::diffusion
