#ifndef MPD_TRAINER_H_
#define MPD_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpd/network.h"
#include "mpd/pwp.h"
#include "mpd/random.h"
#include "mpd/train_log.h"

namespace mpd {

enum class SweepMode { kRandomWithReplacement, kPermutationSweep };

// Mini-batch size schedule: from batch step `start_step` on, the size is
// multiplied by `factor` once, then again every `interval` batch steps,
// never exceeding `cap` (0 means the training-set size).
struct MinibatchGrowth {
  bool enabled = true;
  std::size_t start_step = 200;
  double factor = 2.0;
  std::size_t interval = 100;
  std::size_t cap = 0;
};

struct TrainConfig {
  std::size_t total_batch_steps = 100;
  std::size_t minibatch_size = 2048;
  MinibatchGrowth growth;
  std::uint64_t seed = 1;
  SweepMode sweep_mode = SweepMode::kPermutationSweep;
  std::size_t log_every = 1;
  // Run the mini-batch size schedule at batch step t for a training set of
  // n samples.
  std::size_t MinibatchAt(std::size_t t, std::size_t n) const;
};

// Every parameter i.i.d. uniform on (-sqrt(3 v), sqrt(3 v)), v = 2 / fan_in
// of its layer (d_in for the hidden layer, d_hidden for the output layer).
NetworkParams InitParams(const NetworkShape& shape, std::uint64_t seed);

// The mini-batches of batch step t: a fresh seeded permutation of [0, n)
// cut into ceil(n / minibatch) consecutive chunks, the last possibly short.
std::vector<std::vector<std::size_t>> MinibatchIndices(std::size_t n, std::size_t minibatch,
                                                       std::size_t t, std::uint64_t seed);

struct MpdStepResult {
  double old_value;
  double new_value;
  double h_min;
  PwpFunction h;
};

// One coordinate update: h = sum of the batch messages for p, and
// theta_p <- argmin h (ties resolved towards the current value). No other
// parameter changes.
MpdStepResult MpdStep(NetworkParams& params, std::span<const Sample> batch, const ParamRef& p);

// Same update with messages read from `cache`, whose samples are indexed by
// `batch`. The cache is updated to the new parameter value.
MpdStepResult MpdStep(NetworkParams& params, ForwardCache& cache,
                      std::span<const std::size_t> batch, const ParamRef& p);

// Picks the parameter for each coordinate update.
class ParamSchedule {
 public:
  ParamSchedule(std::size_t n_params, SweepMode mode, std::uint64_t seed);
  std::size_t Next();

 private:
  std::size_t n_params_;
  SweepMode mode_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
};

// Runs config.total_batch_steps batch steps of mini-batch MPD from
// `init`. One coordinate update per mini-batch. Losses are logged after
// every log_every batch steps (and always after the last); record 0 holds
// the initial losses. `val` may be empty (its loss is then logged as NaN).
TrainLog TrainMpd(const NetworkParams& init, std::span<const Sample> train,
                  std::span<const Sample> val, const TrainConfig& config);

// As above, starting from InitParams(shape, config.seed).
TrainLog TrainMpd(const NetworkShape& shape, std::span<const Sample> train,
                  std::span<const Sample> val, const TrainConfig& config);

// Stream tags for DeriveSeed shared by the trainers.
enum SeedStream : std::uint64_t {
  kInitStream = 1,
  kMinibatchStream = 2,
  kScheduleStream = 3,
};

}  // namespace mpd

#endif  // MPD_TRAINER_H_
