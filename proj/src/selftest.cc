#include "mpd/selftest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mpd/baselines.h"
#include "mpd/dataset.h"
#include "mpd/errors.h"
#include "mpd/testing.h"
#include "mpd/trainer.h"

namespace mpd {
namespace {

using testing::GridScan;
using testing::RandomBoundedQuadratic;
using testing::RandomPwp;

constexpr std::uint64_t kSeed = 20240917;

double RelErr(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

std::string Fmt(const char* fmt, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

CheckResult SumOracle(const SumFn& sum) {
  Rng rng(DeriveSeed(kSeed, 1));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PwpFunction> fs;
    const std::size_t k = 1 + rng.Below(6);
    for (std::size_t i = 0; i < k; ++i) fs.push_back(RandomPwp(rng, 2, 8, -3.0, 3.0));
    const PwpFunction h = sum(fs);
    for (int probe = 0; probe < 200; ++probe) {
      const double x = rng.Uniform(-6.0, 6.0);
      double want = 0.0;
      for (const auto& f : fs) want += f(x);
      worst = std::max(worst, RelErr(h(x), want));
    }
  }
  return {"pwp", "sum_matches_pointwise_sum", worst <= 1e-9, Fmt("max rel err %.3g", worst)};
}

CheckResult SumPermutation(const SumFn& sum) {
  Rng rng(DeriveSeed(kSeed, 2));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PwpFunction> fs;
    for (int i = 0; i < 5; ++i) fs.push_back(RandomPwp(rng, 2, 6, -3.0, 3.0));
    const PwpFunction a = sum(fs);
    std::vector<PwpFunction> shuffled;
    for (std::size_t i : rng.Permutation(fs.size())) shuffled.push_back(fs[i]);
    if (!(sum(shuffled) == a)) {
      return {"pwp", "sum_order_independent", false, "trial " + std::to_string(trial)};
    }
  }
  return {"pwp", "sum_order_independent", true, ""};
}

CheckResult ComposeOracle() {
  Rng rng(DeriveSeed(kSeed, 3));
  const PwlActivation act = PwlActivation::LeakyHardTanh();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const PwpFunction inner = testing::RandomContinuousLinear(rng, 5, -2.0, 2.0);
    const PwpFunction g = ComposeActivation(act, inner);
    for (int probe = 0; probe < 100; ++probe) {
      const double x = rng.Uniform(-5.0, 5.0);
      worst = std::max(worst, RelErr(g(x), act(inner(x))));
    }
  }
  return {"pwp", "compose_matches_pointwise", worst <= 1e-12, Fmt("max rel err %.3g", worst)};
}

CheckResult GlobalMinGrid() {
  Rng rng(DeriveSeed(kSeed, 4));
  double worst_value = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const PwpFunction f = RandomBoundedQuadratic(rng, 20);
    const MinResult m = GlobalMin(f, 0.0);
    const auto grid = GridScan(f, -5.0, 5.0, 20001);
    worst_value = std::max(worst_value, std::abs(m.min_value - grid.value));
    // Grid can only overestimate the minimum.
    ok = ok && m.min_value <= grid.value + 1e-8 && f(m.argmin) <= m.min_value + 1e-12;
  }
  ok = ok && worst_value <= 1e-2;
  return {"pwp", "global_min_vs_grid", ok, Fmt("max value gap %.3g", worst_value)};
}

CheckResult TextRoundTrip() {
  Rng rng(DeriveSeed(kSeed, 5));
  for (int trial = 0; trial < 10; ++trial) {
    const PwpFunction f = RandomPwp(rng, 2, 10, -3.0, 3.0);
    std::stringstream io;
    WriteText(io, f);
    if (!(ReadText(io) == f)) return {"pwp", "text_round_trip", false, ""};
  }
  return {"pwp", "text_round_trip", true, ""};
}

CheckResult MessageOracle() {
  Rng rng(DeriveSeed(kSeed, 6));
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkShape shape{1 + rng.Below(3), 1 + rng.Below(5), 1 + rng.Below(2)};
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    const Sample s = testing::RandomSample(rng, shape);
    const ParamRef p = RefFromFlat(shape, rng.Below(ParamCount(shape)));
    const PwpFunction msg = BuildMessage(params, s, p);
    for (int probe = 0; probe < 10; ++probe) {
      const double theta = rng.Uniform(-4.0, 4.0);
      worst = std::max(worst, RelErr(msg(theta), testing::LossWithOverride(params, s, p, theta)));
    }
  }
  return {"nn", "message_matches_forward", worst <= 1e-10, Fmt("max rel err %.3g", worst)};
}

CheckResult GradientCheck() {
  Rng rng(DeriveSeed(kSeed, 7));
  double worst = 0.0;
  int checked = 0;
  while (checked < 10) {
    const NetworkShape shape{2, 3, 1};
    const NetworkParams params = testing::RandomParams(rng, shape, 1.0);
    std::vector<Sample> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(testing::RandomSample(rng, shape));
    if (testing::KinkDistance(params, samples) < 1e-3) continue;
    ++checked;
    const auto analytic = Gradient(params, samples);
    const auto numeric = testing::FiniteDifferenceGradient(params, samples, 1e-6);
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      worst = std::max(worst, RelErr(analytic[k], numeric[k]));
    }
  }
  return {"nn", "gradient_vs_finite_differences", worst <= 1e-5, Fmt("max rel err %.3g", worst)};
}

CheckResult ParamCountCheck() {
  const std::size_t n = ParamCount(NetworkShape{2, 500, 1});
  return {"nn", "param_count", n == 2001, "ParamCount(2,500,1) = " + std::to_string(n)};
}

CheckResult FullBatchMonotone() {
  const Dataset data = Standardize(SyntheticRugged(SyntheticKind::kTerrain, 128, 2, kSeed));
  TrainConfig config;
  config.total_batch_steps = 60;
  config.minibatch_size = data.size();
  config.growth.enabled = false;
  config.seed = kSeed;
  const TrainLog log = TrainMpd(NetworkShape{2, 8, 1}, data.samples, {}, config);
  double worst = 0.0;
  for (std::size_t k = 1; k < log.records.size(); ++k) {
    worst = std::max(worst, log.records[k].train_loss - log.records[k - 1].train_loss);
  }
  const bool descended = log.records.back().train_loss < log.records.front().train_loss;
  return {"mpd", "full_batch_monotone", worst <= 1e-12 && descended,
          Fmt("max increase %.3g, final/initial %.4f", worst,
              log.records.back().train_loss / log.records.front().train_loss)};
}

CheckResult StepNeverWorse() {
  Rng rng(DeriveSeed(kSeed, 8));
  const NetworkShape shape{2, 4, 2};
  NetworkParams params = testing::RandomParams(rng, shape, 1.0);
  std::vector<Sample> batch;
  for (int i = 0; i < 32; ++i) batch.push_back(testing::RandomSample(rng, shape));
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    const ParamRef p = RefFromFlat(shape, rng.Below(params.size()));
    const double before = Loss(params, batch);
    MpdStep(params, batch, p);
    worst = std::max(worst, Loss(params, batch) - before);
  }
  return {"mpd", "step_never_increases_batch_loss", worst <= 1e-12,
          Fmt("max increase %.3g", worst)};
}

CheckResult MinibatchPartition() {
  for (std::size_t n : {10u, 37u, 100u}) {
    for (std::size_t m : {1u, 3u, 10u}) {
      const auto chunks = MinibatchIndices(n, m, 5, kSeed);
      std::vector<std::size_t> all;
      for (const auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
      std::sort(all.begin(), all.end());
      bool ok = chunks.size() == (n + m - 1) / m && all.size() == n;
      for (std::size_t i = 0; ok && i < n; ++i) ok = all[i] == i;
      if (!ok) return {"mpd", "minibatches_partition", false, "n=" + std::to_string(n)};
    }
  }
  return {"mpd", "minibatches_partition", true, ""};
}

CheckResult AdamFirstStep() {
  // The first bias-corrected Adam step moves every coordinate by lr * sign(g)
  // up to epsilon.
  std::vector<double> params{1.0, -2.0, 0.5};
  const std::vector<double> grad{0.3, -4.0, 1e-3};
  AdamState state(3);
  AdamStep(params, grad, state, 1e-3, 0.9, 0.999, 1e-8);
  const double want[] = {1.0 - 1e-3, -2.0 + 1e-3, 0.5 - 1e-3};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(params[k] - want[k]));
  return {"baselines", "adam_first_step", worst <= 1e-7, Fmt("max err %.3g", worst)};
}

CheckResult NagQuadratic() {
  // On f(x) = x^2 / 2 the lookahead recursion is linear; compare with it.
  std::vector<double> x{1.0};
  NagState state(1);
  double ref_x = 1.0, ref_v = 0.0;
  const double lr = 0.1, mu = 0.9;
  double worst = 0.0;
  for (int step = 0; step < 50; ++step) {
    const auto look = NagLookahead(x, state, mu);
    const std::vector<double> g{look[0]};
    NagStep(x, state, lr, mu, g);
    ref_v = mu * ref_v - lr * (ref_x + mu * ref_v);
    ref_x += ref_v;
    worst = std::max(worst, std::abs(x[0] - ref_x));
  }
  const bool converging = std::abs(x[0]) < 0.5;
  return {"baselines", "nag_quadratic_recursion", worst <= 1e-14 && converging,
          Fmt("max err %.3g", worst)};
}

CheckResult GdDescends() {
  const Dataset data = Standardize(SyntheticRugged(SyntheticKind::kTeacherPwl, 256, 2, kSeed));
  const NetworkParams init = InitParams(NetworkShape{2, 8, 1}, kSeed);
  GdConfig config;
  config.learning_rate = 1e-2;
  config.minibatch_size = 32;
  config.total_batch_steps = 20;
  bool ok = true;
  for (GdMethod method : {GdMethod::kAdam, GdMethod::kNag}) {
    const TrainLog log = TrainGd(init, data.samples, {}, config, method);
    ok = ok && log.records.back().train_loss < log.records.front().train_loss;
  }
  return {"baselines", "gd_descends_on_teacher", ok, ""};
}

CheckResult StandardizeMoments() {
  const Dataset data = Standardize(SyntheticRugged(SyntheticKind::kTerrain, 200, 3, kSeed));
  double worst = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    double sum = 0.0, sq = 0.0;
    for (const Sample& s : data.samples) sum += s.x[d];
    const double mean = sum / 200.0;
    for (const Sample& s : data.samples) sq += (s.x[d] - mean) * (s.x[d] - mean);
    worst = std::max({worst, std::abs(mean), std::abs(sq / 200.0 - 1.0)});
  }
  return {"data", "standardized_moments", worst <= 1e-12, Fmt("max deviation %.3g", worst)};
}

CheckResult SplitPartition() {
  const Split split = Split80_20(101, kSeed);
  std::vector<std::size_t> all = split.train;
  all.insert(all.end(), split.val.begin(), split.val.end());
  std::sort(all.begin(), all.end());
  bool ok = split.train.size() == 81 && all.size() == 101;
  for (std::size_t i = 0; ok && i < all.size(); ++i) ok = all[i] == i;
  return {"data", "split_partitions_indices", ok, ""};
}

CheckResult CsvRoundTrip() {
  const Dataset data = SyntheticRugged(SyntheticKind::kTeacherPwl, 20, 2, kSeed);
  std::stringstream io;
  io << "a,b,y\n";
  char buf[128];
  for (const Sample& s : data.samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.x[0], s.x[1], s.y[0]);
    io << buf;
  }
  const std::size_t xc[] = {0, 1};
  const std::size_t yc[] = {2};
  const Dataset back = LoadCsv(io, xc, yc, true);
  bool ok = back.size() == data.size();
  for (std::size_t i = 0; ok && i < data.size(); ++i) {
    ok = back.samples[i].x == data.samples[i].x && back.samples[i].y == data.samples[i].y;
  }
  return {"data", "csv_round_trip", ok, ""};
}

}  // namespace

PwpFunction CorruptedSum(std::span<const PwpFunction> fs) {
  const PwpFunction h = SumPwp(fs);
  std::vector<double> coeffs(h.coeffs().begin(), h.coeffs().end());
  coeffs[(h.pieces() - 1) * static_cast<std::size_t>(h.degree() + 1)] += 1e-6;
  return PwpFunction(h.degree(), std::vector<double>(h.mesh().begin(), h.mesh().end()),
                     std::move(coeffs));
}

std::vector<CheckResult> RunSelfTest(const SelfTestOptions& options) {
  static const char* const kModules[] = {"pwp", "nn", "mpd", "baselines", "data"};
  const std::string& filter = options.filter;
  if (!filter.empty() && std::find(std::begin(kModules), std::end(kModules), filter) ==
                             std::end(kModules)) {
    throw DomainError("unknown self-test module '" + filter + "'");
  }
  const SumFn sum = options.sum ? options.sum : SumFn([](std::span<const PwpFunction> fs) {
    return SumPwp(fs);
  });
  const auto want = [&](const char* module) { return filter.empty() || filter == module; };

  std::vector<CheckResult> results;
  if (want("pwp")) {
    results.push_back(SumOracle(sum));
    results.push_back(SumPermutation(sum));
    results.push_back(ComposeOracle());
    results.push_back(GlobalMinGrid());
    results.push_back(TextRoundTrip());
  }
  if (want("nn")) {
    results.push_back(MessageOracle());
    results.push_back(GradientCheck());
    results.push_back(ParamCountCheck());
  }
  if (want("mpd")) {
    results.push_back(FullBatchMonotone());
    results.push_back(StepNeverWorse());
    results.push_back(MinibatchPartition());
  }
  if (want("baselines")) {
    results.push_back(AdamFirstStep());
    results.push_back(NagQuadratic());
    results.push_back(GdDescends());
  }
  if (want("data")) {
    results.push_back(StandardizeMoments());
    results.push_back(SplitPartition());
    results.push_back(CsvRoundTrip());
  }
  return results;
}

}  // namespace mpd
