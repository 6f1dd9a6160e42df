#ifndef MPD_NETWORK_H_
#define MPD_NETWORK_H_

#include <cstddef>
#include <span>
#include <vector>

#include "mpd/pwp.h"

namespace mpd {

// One hidden layer: y = w2 * act(w1 * x + b1) + b2.
struct NetworkShape {
  std::size_t d_in = 1;
  std::size_t d_hidden = 1;
  std::size_t d_out = 1;
  PwlActivation activation = PwlActivation::LeakyHardTanh();

  void Validate() const;
};

std::size_t ParamCount(const NetworkShape& shape);

enum class ParamKind { kW1, kB1, kW2, kB2 };

// One scalar parameter. Biases use `row` only; `col` must be 0.
struct ParamRef {
  ParamKind kind;
  std::size_t row = 0;
  std::size_t col = 0;

  bool operator==(const ParamRef&) const = default;
};

// Flat order: W1 row-major, B1, W2 row-major, B2.
std::size_t FlatIndex(const NetworkShape& shape, const ParamRef& p);
ParamRef RefFromFlat(const NetworkShape& shape, std::size_t index);

// Weights and biases stored as one flat vector in FlatIndex order.
class NetworkParams {
 public:
  explicit NetworkParams(NetworkShape shape);
  NetworkParams(NetworkShape shape, std::vector<double> flat);

  const NetworkShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  double w1(std::size_t h, std::size_t i) const { return values_[h * shape_.d_in + i]; }
  double b1(std::size_t h) const { return values_[b1_offset_ + h]; }
  double w2(std::size_t o, std::size_t h) const {
    return values_[w2_offset_ + o * shape_.d_hidden + h];
  }
  double b2(std::size_t o) const { return values_[b2_offset_ + o]; }

  double& at(const ParamRef& p) { return values_[FlatIndex(shape_, p)]; }
  double at(const ParamRef& p) const { return values_[FlatIndex(shape_, p)]; }

  bool operator==(const NetworkParams& other) const { return values_ == other.values_; }

 private:
  NetworkShape shape_;
  std::size_t b1_offset_;
  std::size_t w2_offset_;
  std::size_t b2_offset_;
  std::vector<double> values_;
};

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
};

std::vector<double> Forward(const NetworkParams& params, std::span<const double> x);

// Mean over samples of the squared Euclidean output error.
double Loss(const NetworkParams& params, std::span<const Sample> samples);

// Gradient of Loss in flat order.
std::vector<double> Gradient(const NetworkParams& params, std::span<const Sample> samples);

// Network outputs as exact piecewise-linear functions of parameter p, all
// other parameters held at their current values. One function per output.
std::vector<PwpFunction> OutputTrace(const NetworkParams& params, std::span<const double> x,
                                     const ParamRef& p);

// The per-sample loss ||y - net(x)||^2 as a piecewise quadratic in p.
PwpFunction BuildMessage(const NetworkParams& params, const Sample& sample, const ParamRef& p);

// Hidden pre-activations and outputs of every sample, kept in step with a
// parameter vector that changes one coordinate at a time. Messages built
// from the cache skip the O(d_in * d_hidden) forward pass per sample.
class ForwardCache {
 public:
  ForwardCache(const NetworkParams& params, std::span<const Sample> samples);

  // Recomputes everything from scratch.
  void Rebuild(const NetworkParams& params);

  // Call after `params.at(p)` changed from `old_value`.
  void Update(const NetworkParams& params, const ParamRef& p, double old_value);

  PwpFunction Message(const NetworkParams& params, std::size_t sample, const ParamRef& p) const;

  std::span<const double> outputs(std::size_t sample) const {
    return std::span<const double>(outputs_).subspan(sample * d_out_, d_out_);
  }

 private:
  std::span<const Sample> samples_;
  std::size_t d_hidden_;
  std::size_t d_out_;
  std::vector<double> pre_;      // [sample][hidden]
  std::vector<double> outputs_;  // [sample][output]
};

}  // namespace mpd

#endif  // MPD_NETWORK_H_
