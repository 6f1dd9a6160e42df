#ifndef MPD_RANDOM_H_
#define MPD_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mpd {

// Mixes a seed with a stream tag so that independent streams (dataset,
// split, init, schedule, ...) derived from one user seed do not overlap.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// Thin wrapper over mt19937_64. All distributions are implemented here
// rather than through <random> distribution objects, whose output is
// implementation-defined; this keeps seeded runs identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double Uniform01();

  // Uniform on the open interval (lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t Below(std::size_t n);

  double Normal();

  std::vector<std::size_t> Permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mpd

#endif  // MPD_RANDOM_H_
