#ifndef MPD_BASELINES_H_
#define MPD_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpd/network.h"
#include "mpd/train_log.h"

namespace mpd {

struct GdConfig {
  double learning_rate = 1e-3;
  std::size_t minibatch_size = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;
  std::size_t total_batch_steps = 100;
  std::uint64_t seed = 1;
  std::size_t log_every = 1;

  void Validate() const;
};

enum class GdMethod { kAdam, kNag };

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;  // steps taken so far

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update with bias-corrected moments; advances state.t first.
void AdamStep(std::span<double> params, std::span<const double> grad, AdamState& state,
              double lr, double beta1, double beta2, double epsilon);

struct NagState {
  std::vector<double> velocity;

  explicit NagState(std::size_t n) : velocity(n, 0.0) {}
};

// params + momentum * velocity, where the gradient for the next NagStep is
// evaluated.
std::vector<double> NagLookahead(std::span<const double> params, const NagState& state,
                                 double momentum);

// velocity <- momentum * velocity - lr * grad_at_lookahead;
// params <- params + velocity.
void NagStep(std::span<double> params, NagState& state, double lr, double momentum,
             std::span<const double> grad_at_lookahead);

// Mini-batch Adam or NAG from `init` with the same logging contract and
// mini-batch partition scheme as TrainMpd.
TrainLog TrainGd(const NetworkParams& init, std::span<const Sample> train,
                 std::span<const Sample> val, const GdConfig& config, GdMethod method);

}  // namespace mpd

#endif  // MPD_BASELINES_H_
