#ifndef MPD_TESTING_H_
#define MPD_TESTING_H_

// Random instance generators and brute-force oracles. They deliberately
// avoid the merge, composition and minimization code they are used to check.

#include <cstddef>
#include <span>
#include <vector>

#include "mpd/network.h"
#include "mpd/pwp.h"
#include "mpd/random.h"

namespace mpd::testing {

// Up to max_pieces subdomains, breakpoints in [lo, hi], coefficients
// uniform in [-1, 1]. Not necessarily continuous.
PwpFunction RandomPwp(Rng& rng, int degree, std::size_t max_pieces, double lo, double hi);

// Continuous piecewise quadratic with breakpoints in [-4, 4], convex tails
// whose vertices lie in [-4.5, 4.5], so the global minimum lies in
// [-4.5, 4.5]. Interior pieces may be concave.
PwpFunction RandomBoundedQuadratic(Rng& rng, std::size_t max_pieces);

// Continuous piecewise linear function with breakpoints in [lo, hi].
PwpFunction RandomContinuousLinear(Rng& rng, std::size_t max_pieces, double lo, double hi);

NetworkParams RandomParams(Rng& rng, const NetworkShape& shape, double scale);
Sample RandomSample(Rng& rng, const NetworkShape& shape);

// Direct re-implementation of the forward pass.
std::vector<double> NaiveForward(const NetworkParams& params, std::span<const double> x);

// Squared output error of one sample with parameter p replaced by value.
double LossWithOverride(const NetworkParams& params, const Sample& s, const ParamRef& p,
                        double value);

struct GridMin {
  double at;
  double value;
  double step;
};

// Minimum of f over n equally spaced points covering [lo, hi].
GridMin GridScan(const PwpFunction& f, double lo, double hi, std::size_t n);

// Central finite differences of Loss in flat order.
std::vector<double> FiniteDifferenceGradient(const NetworkParams& params,
                                             std::span<const Sample> samples, double step);

// Smallest distance from any hidden pre-activation to a kink.
double KinkDistance(const NetworkParams& params, std::span<const Sample> samples);

}  // namespace mpd::testing

#endif  // MPD_TESTING_H_
