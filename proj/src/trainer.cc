#include "mpd/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mpd/errors.h"
#include "mpd/parallel.h"

namespace mpd {
namespace {

constexpr std::size_t kMessageGrain = 512;

MpdStepResult Minimize(NetworkParams& params, std::vector<PwpFunction> messages,
                       const ParamRef& p) {
  PwpFunction h = SumPwp(messages);
  double& theta = params.at(p);
  const double old_value = theta;
  MinResult best;
  try {
    best = GlobalMin(h, old_value);
  } catch (const UnboundedBelow& e) {
    // A sum of squares is bounded below; reaching this is a bug.
    throw std::logic_error(std::string("message sum unbounded below: ") + e.what());
  }
  theta = best.argmin;
  return {old_value, best.argmin, best.min_value, std::move(h)};
}

double LossOrNan(const NetworkParams& params, std::span<const Sample> samples) {
  return samples.empty() ? std::numeric_limits<double>::quiet_NaN() : Loss(params, samples);
}

}  // namespace

std::size_t TrainConfig::MinibatchAt(std::size_t t, std::size_t n) const {
  std::size_t size = std::clamp<std::size_t>(minibatch_size, 1, n);
  if (!growth.enabled || t < growth.start_step || growth.factor <= 1.0) return size;
  const std::size_t cap = growth.cap == 0 ? n : std::min(growth.cap, n);
  const std::size_t times = 1 + (t - growth.start_step) / std::max<std::size_t>(growth.interval, 1);
  double grown = static_cast<double>(size);
  for (std::size_t k = 0; k < times && grown < static_cast<double>(cap); ++k) grown *= growth.factor;
  return std::max(size, std::min(cap, static_cast<std::size_t>(std::llround(grown))));
}

NetworkParams InitParams(const NetworkShape& shape, std::uint64_t seed) {
  NetworkParams params(shape);
  Rng rng(DeriveSeed(seed, kInitStream));
  const double hidden_bound = std::sqrt(3.0 * 2.0 / static_cast<double>(shape.d_in));
  const double output_bound = std::sqrt(3.0 * 2.0 / static_cast<double>(shape.d_hidden));
  auto flat = params.flat();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const ParamKind kind = RefFromFlat(shape, k).kind;
    const bool hidden = kind == ParamKind::kW1 || kind == ParamKind::kB1;
    const double bound = hidden ? hidden_bound : output_bound;
    flat[k] = rng.Uniform(-bound, bound);
  }
  return params;
}

std::vector<std::vector<std::size_t>> MinibatchIndices(std::size_t n, std::size_t minibatch,
                                                       std::size_t t, std::uint64_t seed) {
  if (minibatch < 1 || minibatch > n) throw DomainError("mini-batch size must lie in [1, S]");
  Rng rng(DeriveSeed(DeriveSeed(seed, kMinibatchStream), t));
  const auto perm = rng.Permutation(n);
  std::vector<std::vector<std::size_t>> chunks;
  chunks.reserve((n + minibatch - 1) / minibatch);
  for (std::size_t begin = 0; begin < n; begin += minibatch) {
    const std::size_t end = std::min(n, begin + minibatch);
    chunks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                        perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return chunks;
}

MpdStepResult MpdStep(NetworkParams& params, std::span<const Sample> batch, const ParamRef& p) {
  if (batch.empty()) throw DomainError("MPD step over an empty batch");
  std::vector<PwpFunction> messages(batch.size(), PwpFunction::Constant(0.0, 2));
  ParallelFor(batch.size(), kMessageGrain, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) messages[s] = BuildMessage(params, batch[s], p);
  });
  return Minimize(params, std::move(messages), p);
}

MpdStepResult MpdStep(NetworkParams& params, ForwardCache& cache,
                      std::span<const std::size_t> batch, const ParamRef& p) {
  if (batch.empty()) throw DomainError("MPD step over an empty batch");
  std::vector<PwpFunction> messages(batch.size(), PwpFunction::Constant(0.0, 2));
  ParallelFor(batch.size(), kMessageGrain, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) messages[k] = cache.Message(params, batch[k], p);
  });
  MpdStepResult result = Minimize(params, std::move(messages), p);
  if (result.new_value != result.old_value) cache.Update(params, p, result.old_value);
  return result;
}

ParamSchedule::ParamSchedule(std::size_t n_params, SweepMode mode, std::uint64_t seed)
    : n_params_(n_params), mode_(mode), rng_(DeriveSeed(seed, kScheduleStream)), cursor_(0) {
  if (n_params_ == 0) throw DomainError("no parameters to schedule");
}

std::size_t ParamSchedule::Next() {
  if (mode_ == SweepMode::kRandomWithReplacement) return rng_.Below(n_params_);
  if (cursor_ == order_.size()) {
    order_ = rng_.Permutation(n_params_);
    cursor_ = 0;
  }
  return order_[cursor_++];
}

TrainLog TrainMpd(const NetworkParams& init, std::span<const Sample> train,
                  std::span<const Sample> val, const TrainConfig& config) {
  if (train.empty()) throw DomainError("empty training set");
  TrainLog log;
  NetworkParams params = init;
  if (config.total_batch_steps == 0) {
    log.final_params = params;
    return log;
  }
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };
  log.Append({0, Loss(params, train), LossOrNan(params, val), elapsed_ms()});

  ForwardCache cache(params, train);
  ParamSchedule schedule(params.size(), config.sweep_mode, config.seed);
  const NetworkShape& shape = params.shape();
  const std::size_t log_every = std::max<std::size_t>(config.log_every, 1);
  for (std::size_t t = 0; t < config.total_batch_steps; ++t) {
    // Incremental output updates drift by rounding; resync once per batch step.
    cache.Rebuild(params);
    const std::size_t minibatch = config.MinibatchAt(t, train.size());
    for (const auto& chunk : MinibatchIndices(train.size(), minibatch, t, config.seed)) {
      MpdStep(params, cache, chunk, RefFromFlat(shape, schedule.Next()));
    }
    const std::size_t step = t + 1;
    if (step % log_every == 0 || step == config.total_batch_steps) {
      log.Append({step, Loss(params, train), LossOrNan(params, val), elapsed_ms()});
    }
  }
  log.final_params = params;
  return log;
}

TrainLog TrainMpd(const NetworkShape& shape, std::span<const Sample> train,
                  std::span<const Sample> val, const TrainConfig& config) {
  return TrainMpd(InitParams(shape, config.seed), train, val, config);
}

}  // namespace mpd
