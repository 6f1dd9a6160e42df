#include "mpd/testing.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpd::testing {
namespace {

std::vector<double> RandomMesh(Rng& rng, std::size_t breaks, double lo, double hi) {
  std::vector<double> mesh;
  while (mesh.size() < breaks) {
    mesh.push_back(rng.Uniform(lo, hi));
    std::sort(mesh.begin(), mesh.end());
    // Keep breakpoints comfortably apart.
    mesh.erase(std::unique(mesh.begin(), mesh.end(),
                           [](double a, double b) { return b - a < 1e-6; }),
               mesh.end());
  }
  return mesh;
}

}  // namespace

PwpFunction RandomPwp(Rng& rng, int degree, std::size_t max_pieces, double lo, double hi) {
  const std::size_t pieces = 1 + rng.Below(max_pieces);
  auto mesh = RandomMesh(rng, pieces - 1, lo, hi);
  std::vector<double> coeffs(pieces * (static_cast<std::size_t>(degree) + 1));
  for (double& c : coeffs) c = rng.Uniform(-1.0, 1.0);
  return PwpFunction(degree, std::move(mesh), std::move(coeffs));
}

PwpFunction RandomBoundedQuadratic(Rng& rng, std::size_t max_pieces) {
  const std::size_t pieces = 1 + rng.Below(max_pieces);
  auto mesh = RandomMesh(rng, pieces - 1, -4.0, 4.0);
  std::vector<double> coeffs;
  coeffs.reserve(3 * pieces);

  // Left tail: convex, vertex in [-4.5, first breakpoint].
  const double first = mesh.empty() ? 4.5 : mesh.front();
  {
    const double c2 = rng.Uniform(0.1, 2.0);
    const double vertex = rng.Uniform(-4.5, first);
    coeffs.insert(coeffs.end(), {rng.Uniform(-1.0, 1.0), -2.0 * c2 * vertex, c2});
  }
  for (std::size_t r = 1; r < pieces; ++r) {
    const double at = mesh[r - 1];
    const double* prev = &coeffs[3 * (r - 1)];
    const double value = prev[0] + prev[1] * at + prev[2] * at * at;
    double c2, c1;
    if (r + 1 == pieces) {
      c2 = rng.Uniform(0.1, 2.0);
      c1 = -2.0 * c2 * rng.Uniform(at, 4.5);
    } else {
      c2 = rng.Uniform(-1.0, 2.0);
      c1 = rng.Uniform(-2.0, 2.0);
    }
    coeffs.insert(coeffs.end(), {value - c1 * at - c2 * at * at, c1, c2});
  }
  return PwpFunction(2, std::move(mesh), std::move(coeffs));
}

PwpFunction RandomContinuousLinear(Rng& rng, std::size_t max_pieces, double lo, double hi) {
  const std::size_t pieces = 1 + rng.Below(max_pieces);
  auto mesh = RandomMesh(rng, pieces - 1, lo, hi);
  std::vector<double> coeffs;
  coeffs.reserve(2 * pieces);
  coeffs.insert(coeffs.end(), {rng.Uniform(-1.0, 1.0), rng.Uniform(-2.0, 2.0)});
  for (std::size_t r = 1; r < pieces; ++r) {
    const double at = mesh[r - 1];
    const double value = coeffs[2 * (r - 1)] + coeffs[2 * (r - 1) + 1] * at;
    const double slope = rng.Uniform(-2.0, 2.0);
    coeffs.insert(coeffs.end(), {value - slope * at, slope});
  }
  return PwpFunction(1, std::move(mesh), std::move(coeffs));
}

NetworkParams RandomParams(Rng& rng, const NetworkShape& shape, double scale) {
  std::vector<double> flat(ParamCount(shape));
  for (double& v : flat) v = scale * rng.Normal();
  return NetworkParams(shape, std::move(flat));
}

Sample RandomSample(Rng& rng, const NetworkShape& shape) {
  Sample s;
  s.x.resize(shape.d_in);
  s.y.resize(shape.d_out);
  for (double& v : s.x) v = rng.Normal();
  for (double& v : s.y) v = rng.Normal();
  return s;
}

std::vector<double> NaiveForward(const NetworkParams& params, std::span<const double> x) {
  const NetworkShape& shape = params.shape();
  std::vector<double> hidden(shape.d_hidden);
  for (std::size_t h = 0; h < shape.d_hidden; ++h) {
    double acc = 0.0;
    for (std::size_t i = 0; i < shape.d_in; ++i) {
      acc += params.flat()[FlatIndex(shape, {ParamKind::kW1, h, i})] * x[i];
    }
    acc += params.flat()[FlatIndex(shape, {ParamKind::kB1, h, 0})];
    // Leaky hard-tanh written out; other activations go through the object.
    hidden[h] = shape.activation(acc);
  }
  std::vector<double> out(shape.d_out);
  for (std::size_t o = 0; o < shape.d_out; ++o) {
    double acc = params.flat()[FlatIndex(shape, {ParamKind::kB2, o, 0})];
    for (std::size_t h = 0; h < shape.d_hidden; ++h) {
      acc += params.flat()[FlatIndex(shape, {ParamKind::kW2, o, h})] * hidden[h];
    }
    out[o] = acc;
  }
  return out;
}

double LossWithOverride(const NetworkParams& params, const Sample& s, const ParamRef& p,
                        double value) {
  NetworkParams copy = params;
  copy.at(p) = value;
  const auto out = NaiveForward(copy, s.x);
  double total = 0.0;
  for (std::size_t o = 0; o < out.size(); ++o) total += (s.y[o] - out[o]) * (s.y[o] - out[o]);
  return total;
}

GridMin GridScan(const PwpFunction& f, double lo, double hi, std::size_t n) {
  const double step = (hi - lo) / static_cast<double>(n - 1);
  GridMin best{lo, std::numeric_limits<double>::infinity(), step};
  for (std::size_t k = 0; k < n; ++k) {
    const double x = lo + step * static_cast<double>(k);
    const double v = f(x);
    if (v < best.value) best = {x, v, step};
  }
  return best;
}

std::vector<double> FiniteDifferenceGradient(const NetworkParams& params,
                                             std::span<const Sample> samples, double step) {
  std::vector<double> grad(params.size());
  NetworkParams probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double base = params.flat()[k];
    probe.flat()[k] = base + step;
    const double up = Loss(probe, samples);
    probe.flat()[k] = base - step;
    const double down = Loss(probe, samples);
    probe.flat()[k] = base;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

double KinkDistance(const NetworkParams& params, std::span<const Sample> samples) {
  const NetworkShape& shape = params.shape();
  double best = std::numeric_limits<double>::infinity();
  for (const Sample& s : samples) {
    for (std::size_t h = 0; h < shape.d_hidden; ++h) {
      double pre = params.b1(h);
      for (std::size_t i = 0; i < shape.d_in; ++i) pre += params.w1(h, i) * s.x[i];
      for (double k : shape.activation.kinks()) best = std::min(best, std::abs(pre - k));
    }
  }
  return best;
}

}  // namespace mpd::testing
