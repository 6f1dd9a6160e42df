#include "mpd/baselines.h"

#include <chrono>
#include <cmath>
#include <limits>

#include "mpd/errors.h"
#include "mpd/trainer.h"

namespace mpd {

void GdConfig::Validate() const {
  if (!(learning_rate >= 0.0)) throw DomainError("learning rate must be non-negative");
  if (minibatch_size < 1) throw DomainError("mini-batch size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in [0, 1)");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
}

void AdamStep(std::span<double> params, std::span<const double> grad, AdamState& state,
              double lr, double beta1, double beta2, double epsilon) {
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw DomainError("Adam state and gradient sizes must match the parameters");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grad[k];
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grad[k] * grad[k];
    const double m_hat = state.m[k] / correction1;
    const double v_hat = state.v[k] / correction2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

std::vector<double> NagLookahead(std::span<const double> params, const NagState& state,
                                 double momentum) {
  std::vector<double> ahead(params.begin(), params.end());
  for (std::size_t k = 0; k < ahead.size(); ++k) ahead[k] += momentum * state.velocity[k];
  return ahead;
}

void NagStep(std::span<double> params, NagState& state, double lr, double momentum,
             std::span<const double> grad_at_lookahead) {
  if (grad_at_lookahead.size() != params.size() || state.velocity.size() != params.size()) {
    throw DomainError("NAG state and gradient sizes must match the parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.velocity[k] = momentum * state.velocity[k] - lr * grad_at_lookahead[k];
    params[k] += state.velocity[k];
  }
}

TrainLog TrainGd(const NetworkParams& init, std::span<const Sample> train,
                 std::span<const Sample> val, const GdConfig& config, GdMethod method) {
  config.Validate();
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
  const auto val_loss = [&] {
    return val.empty() ? std::numeric_limits<double>::quiet_NaN() : Loss(params, val);
  };
  log.Append({0, Loss(params, train), val_loss(), elapsed_ms()});

  AdamState adam(params.size());
  NagState nag(params.size());
  const std::size_t minibatch = std::min(config.minibatch_size, train.size());
  const std::size_t log_every = std::max<std::size_t>(config.log_every, 1);
  std::vector<Sample> batch;
  for (std::size_t t = 0; t < config.total_batch_steps; ++t) {
    for (const auto& chunk : MinibatchIndices(train.size(), minibatch, t, config.seed)) {
      batch.clear();
      for (std::size_t i : chunk) batch.push_back(train[i]);
      if (method == GdMethod::kAdam) {
        const auto grad = Gradient(params, batch);
        AdamStep(params.flat(), grad, adam, config.learning_rate, config.beta1, config.beta2,
                 config.epsilon);
      } else {
        const NetworkParams ahead(params.shape(),
                                  NagLookahead(params.flat(), nag, config.momentum));
        const auto grad = Gradient(ahead, batch);
        NagStep(params.flat(), nag, config.learning_rate, config.momentum, grad);
      }
    }
    const std::size_t step = t + 1;
    if (step % log_every == 0 || step == config.total_batch_steps) {
      log.Append({step, Loss(params, train), val_loss(), elapsed_ms()});
    }
  }
  log.final_params = params;
  return log;
}

}  // namespace mpd
