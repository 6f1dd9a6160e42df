#include "mpd/network.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mpd/errors.h"
#include "mpd/parallel.h"

namespace mpd {
namespace {

constexpr std::size_t kGradientChunk = 256;

void CheckSample(const NetworkShape& shape, const Sample& s) {
  if (s.x.size() != shape.d_in || s.y.size() != shape.d_out) {
    throw DomainError("sample dimensions do not match the network shape");
  }
}

// Traces of all outputs when parameter p feeds hidden unit h, whose
// pre-activation is slope * theta + offset. rest[d] is output d without the
// contribution of unit h.
std::vector<PwpFunction> HiddenUnitTraces(const NetworkParams& params, std::size_t h,
                                          double slope, double offset,
                                          std::span<const double> rest) {
  const PwpFunction unit = ComposeActivation(params.shape().activation, AffineOf(slope, offset));
  std::vector<PwpFunction> traces;
  traces.reserve(rest.size());
  for (std::size_t d = 0; d < rest.size(); ++d) {
    traces.push_back(ScaleAdd(unit, params.w2(d, h), rest[d]));
  }
  return traces;
}

// Traces when p is an output-layer parameter of output o: output o is
// slope * theta + rest_o, the others are the constants `outputs`.
std::vector<PwpFunction> OutputLayerTraces(std::size_t o, double slope, double rest_o,
                                           std::span<const double> outputs) {
  std::vector<PwpFunction> traces;
  traces.reserve(outputs.size());
  for (std::size_t d = 0; d < outputs.size(); ++d) {
    traces.push_back(d == o ? AffineOf(slope, rest_o) : PwpFunction::Constant(outputs[d]));
  }
  return traces;
}

PwpFunction MessageFromTraces(std::span<const double> y, const std::vector<PwpFunction>& traces) {
  if (traces.size() == 1) return SquareResidual(y[0], traces[0]);
  std::vector<PwpFunction> parts;
  parts.reserve(traces.size());
  for (std::size_t d = 0; d < traces.size(); ++d) parts.push_back(SquareResidual(y[d], traces[d]));
  return SumPwp(parts);
}

void CheckRef(const NetworkShape& shape, const ParamRef& p) {
  bool ok = false;
  switch (p.kind) {
    case ParamKind::kW1:
      ok = p.row < shape.d_hidden && p.col < shape.d_in;
      break;
    case ParamKind::kB1:
      ok = p.row < shape.d_hidden && p.col == 0;
      break;
    case ParamKind::kW2:
      ok = p.row < shape.d_out && p.col < shape.d_hidden;
      break;
    case ParamKind::kB2:
      ok = p.row < shape.d_out && p.col == 0;
      break;
  }
  if (!ok) throw DomainError("parameter reference out of range");
}

}  // namespace

void NetworkShape::Validate() const {
  if (d_in == 0 || d_hidden == 0 || d_out == 0) {
    throw DomainError("network widths must be at least 1");
  }
}

std::size_t ParamCount(const NetworkShape& shape) {
  shape.Validate();
  return shape.d_hidden * shape.d_in + shape.d_hidden + shape.d_out * shape.d_hidden + shape.d_out;
}

std::size_t FlatIndex(const NetworkShape& shape, const ParamRef& p) {
  CheckRef(shape, p);
  const std::size_t b1 = shape.d_hidden * shape.d_in;
  const std::size_t w2 = b1 + shape.d_hidden;
  const std::size_t b2 = w2 + shape.d_out * shape.d_hidden;
  switch (p.kind) {
    case ParamKind::kW1:
      return p.row * shape.d_in + p.col;
    case ParamKind::kB1:
      return b1 + p.row;
    case ParamKind::kW2:
      return w2 + p.row * shape.d_hidden + p.col;
    case ParamKind::kB2:
      return b2 + p.row;
  }
  return 0;
}

ParamRef RefFromFlat(const NetworkShape& shape, std::size_t index) {
  const std::size_t b1 = shape.d_hidden * shape.d_in;
  const std::size_t w2 = b1 + shape.d_hidden;
  const std::size_t b2 = w2 + shape.d_out * shape.d_hidden;
  if (index < b1) return {ParamKind::kW1, index / shape.d_in, index % shape.d_in};
  if (index < w2) return {ParamKind::kB1, index - b1, 0};
  if (index < b2) {
    return {ParamKind::kW2, (index - w2) / shape.d_hidden, (index - w2) % shape.d_hidden};
  }
  if (index < b2 + shape.d_out) return {ParamKind::kB2, index - b2, 0};
  throw DomainError("flat parameter index out of range");
}

NetworkParams::NetworkParams(NetworkShape shape)
    : NetworkParams(shape, std::vector<double>(ParamCount(shape), 0.0)) {}

NetworkParams::NetworkParams(NetworkShape shape, std::vector<double> flat)
    : shape_(std::move(shape)), values_(std::move(flat)) {
  if (values_.size() != ParamCount(shape_)) {
    throw DomainError("parameter vector length does not match the network shape");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("parameters must be finite");
  }
  b1_offset_ = shape_.d_hidden * shape_.d_in;
  w2_offset_ = b1_offset_ + shape_.d_hidden;
  b2_offset_ = w2_offset_ + shape_.d_out * shape_.d_hidden;
}

std::vector<double> Forward(const NetworkParams& params, std::span<const double> x) {
  const NetworkShape& shape = params.shape();
  if (x.size() != shape.d_in) throw DomainError("input width does not match the network");
  std::vector<double> out(shape.d_out);
  for (std::size_t o = 0; o < shape.d_out; ++o) out[o] = params.b2(o);
  for (std::size_t h = 0; h < shape.d_hidden; ++h) {
    double pre = params.b1(h);
    for (std::size_t i = 0; i < shape.d_in; ++i) pre += params.w1(h, i) * x[i];
    const double z = shape.activation(pre);
    for (std::size_t o = 0; o < shape.d_out; ++o) out[o] += params.w2(o, h) * z;
  }
  return out;
}

double Loss(const NetworkParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw DomainError("loss over an empty sample list");
  double total = 0.0;
  for (const Sample& s : samples) {
    CheckSample(params.shape(), s);
    const auto out = Forward(params, s.x);
    for (std::size_t o = 0; o < out.size(); ++o) {
      const double r = s.y[o] - out[o];
      total += r * r;
    }
  }
  return total / static_cast<double>(samples.size());
}

std::vector<double> Gradient(const NetworkParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw DomainError("gradient over an empty sample list");
  const NetworkShape& shape = params.shape();
  const std::size_t n_params = params.size();
  const double scale = 2.0 / static_cast<double>(samples.size());

  // Fixed-size chunks reduced in chunk order: the result does not depend on
  // the number of workers.
  const std::size_t chunks = (samples.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(n_params, 0.0));
  const std::size_t b1_off = FlatIndex(shape, {ParamKind::kB1, 0, 0});
  const std::size_t w2_off = FlatIndex(shape, {ParamKind::kW2, 0, 0});
  const std::size_t b2_off = FlatIndex(shape, {ParamKind::kB2, 0, 0});

  ParallelFor(chunks, 1, [&](std::size_t c_begin, std::size_t c_end) {
    std::vector<double> pre(shape.d_hidden), z(shape.d_hidden), err(shape.d_out);
    for (std::size_t c = c_begin; c < c_end; ++c) {
      std::vector<double>& g = partial[c];
      const std::size_t s_end = std::min(samples.size(), (c + 1) * kGradientChunk);
      for (std::size_t s = c * kGradientChunk; s < s_end; ++s) {
        const Sample& sample = samples[s];
        CheckSample(shape, sample);
        for (std::size_t o = 0; o < shape.d_out; ++o) err[o] = params.b2(o);
        for (std::size_t h = 0; h < shape.d_hidden; ++h) {
          double a = params.b1(h);
          for (std::size_t i = 0; i < shape.d_in; ++i) a += params.w1(h, i) * sample.x[i];
          pre[h] = a;
          z[h] = shape.activation(a);
          for (std::size_t o = 0; o < shape.d_out; ++o) err[o] += params.w2(o, h) * z[h];
        }
        for (std::size_t o = 0; o < shape.d_out; ++o) {
          err[o] = scale * (err[o] - sample.y[o]);
          g[b2_off + o] += err[o];
        }
        for (std::size_t h = 0; h < shape.d_hidden; ++h) {
          double back = 0.0;
          for (std::size_t o = 0; o < shape.d_out; ++o) {
            g[w2_off + o * shape.d_hidden + h] += err[o] * z[h];
            back += err[o] * params.w2(o, h);
          }
          back *= shape.activation.Derivative(pre[h]);
          g[b1_off + h] += back;
          for (std::size_t i = 0; i < shape.d_in; ++i) g[h * shape.d_in + i] += back * sample.x[i];
        }
      }
    }
  });

  std::vector<double> grad(n_params, 0.0);
  for (const auto& g : partial) {
    for (std::size_t k = 0; k < n_params; ++k) grad[k] += g[k];
  }
  return grad;
}

std::vector<PwpFunction> OutputTrace(const NetworkParams& params, std::span<const double> x,
                                     const ParamRef& p) {
  const NetworkShape& shape = params.shape();
  CheckRef(shape, p);
  if (x.size() != shape.d_in) throw DomainError("input width does not match the network");

  std::vector<double> z(shape.d_hidden);
  for (std::size_t h = 0; h < shape.d_hidden; ++h) {
    double pre = params.b1(h);
    for (std::size_t i = 0; i < shape.d_in; ++i) pre += params.w1(h, i) * x[i];
    z[h] = shape.activation(pre);
  }
  // Output o with hidden unit `skip` left out (skip == d_hidden keeps all).
  const auto partial_output = [&](std::size_t o, std::size_t skip) {
    double v = params.b2(o);
    for (std::size_t h = 0; h < shape.d_hidden; ++h) {
      if (h != skip) v += params.w2(o, h) * z[h];
    }
    return v;
  };

  switch (p.kind) {
    case ParamKind::kW1:
    case ParamKind::kB1: {
      const std::size_t h = p.row;
      const bool is_weight = p.kind == ParamKind::kW1;
      double offset = is_weight ? params.b1(h) : 0.0;
      for (std::size_t i = 0; i < shape.d_in; ++i) {
        if (!(is_weight && i == p.col)) offset += params.w1(h, i) * x[i];
      }
      const double slope = is_weight ? x[p.col] : 1.0;
      std::vector<double> rest(shape.d_out);
      for (std::size_t o = 0; o < shape.d_out; ++o) rest[o] = partial_output(o, h);
      return HiddenUnitTraces(params, h, slope, offset, rest);
    }
    case ParamKind::kW2: {
      std::vector<double> outputs(shape.d_out);
      for (std::size_t o = 0; o < shape.d_out; ++o) outputs[o] = partial_output(o, shape.d_hidden);
      return OutputLayerTraces(p.row, z[p.col], partial_output(p.row, p.col), outputs);
    }
    case ParamKind::kB2: {
      std::vector<double> outputs(shape.d_out);
      for (std::size_t o = 0; o < shape.d_out; ++o) outputs[o] = partial_output(o, shape.d_hidden);
      return OutputLayerTraces(p.row, 1.0, outputs[p.row] - params.b2(p.row), outputs);
    }
  }
  return {};
}

PwpFunction BuildMessage(const NetworkParams& params, const Sample& sample, const ParamRef& p) {
  CheckSample(params.shape(), sample);
  return MessageFromTraces(sample.y, OutputTrace(params, sample.x, p));
}

ForwardCache::ForwardCache(const NetworkParams& params, std::span<const Sample> samples)
    : samples_(samples),
      d_hidden_(params.shape().d_hidden),
      d_out_(params.shape().d_out),
      pre_(samples.size() * d_hidden_),
      outputs_(samples.size() * d_out_) {
  for (const Sample& s : samples_) CheckSample(params.shape(), s);
  Rebuild(params);
}

void ForwardCache::Rebuild(const NetworkParams& params) {
  const NetworkShape& shape = params.shape();
  for (std::size_t s = 0; s < samples_.size(); ++s) {
    const auto& x = samples_[s].x;
    double* out = &outputs_[s * d_out_];
    for (std::size_t o = 0; o < d_out_; ++o) out[o] = params.b2(o);
    for (std::size_t h = 0; h < d_hidden_; ++h) {
      double pre = params.b1(h);
      for (std::size_t i = 0; i < shape.d_in; ++i) pre += params.w1(h, i) * x[i];
      pre_[s * d_hidden_ + h] = pre;
      const double z = shape.activation(pre);
      for (std::size_t o = 0; o < d_out_; ++o) out[o] += params.w2(o, h) * z;
    }
  }
}

void ForwardCache::Update(const NetworkParams& params, const ParamRef& p, double old_value) {
  const NetworkShape& shape = params.shape();
  const double delta = params.at(p) - old_value;
  switch (p.kind) {
    case ParamKind::kW1:
    case ParamKind::kB1: {
      // The unit's fan-in changed: recompute its pre-activation exactly and
      // shift the outputs by the change in its activation.
      const std::size_t h = p.row;
      for (std::size_t s = 0; s < samples_.size(); ++s) {
        const auto& x = samples_[s].x;
        double pre = params.b1(h);
        for (std::size_t i = 0; i < shape.d_in; ++i) pre += params.w1(h, i) * x[i];
        double& cached = pre_[s * d_hidden_ + h];
        const double dz = shape.activation(pre) - shape.activation(cached);
        cached = pre;
        for (std::size_t o = 0; o < d_out_; ++o) outputs_[s * d_out_ + o] += params.w2(o, h) * dz;
      }
      break;
    }
    case ParamKind::kW2:
      for (std::size_t s = 0; s < samples_.size(); ++s) {
        outputs_[s * d_out_ + p.row] += delta * shape.activation(pre_[s * d_hidden_ + p.col]);
      }
      break;
    case ParamKind::kB2:
      for (std::size_t s = 0; s < samples_.size(); ++s) outputs_[s * d_out_ + p.row] += delta;
      break;
  }
}

PwpFunction ForwardCache::Message(const NetworkParams& params, std::size_t sample,
                                  const ParamRef& p) const {
  const NetworkShape& shape = params.shape();
  const Sample& s = samples_[sample];
  const auto out = outputs(sample);
  switch (p.kind) {
    case ParamKind::kW1:
    case ParamKind::kB1: {
      const std::size_t h = p.row;
      const double pre = pre_[sample * d_hidden_ + h];
      const double z = shape.activation(pre);
      const bool is_weight = p.kind == ParamKind::kW1;
      const double slope = is_weight ? s.x[p.col] : 1.0;
      const double offset = pre - params.at(p) * slope;
      std::vector<double> rest(d_out_);
      for (std::size_t o = 0; o < d_out_; ++o) rest[o] = out[o] - params.w2(o, h) * z;
      return MessageFromTraces(s.y, HiddenUnitTraces(params, h, slope, offset, rest));
    }
    case ParamKind::kW2: {
      const double z = shape.activation(pre_[sample * d_hidden_ + p.col]);
      return MessageFromTraces(
          s.y, OutputLayerTraces(p.row, z, out[p.row] - params.at(p) * z, out));
    }
    case ParamKind::kB2:
      return MessageFromTraces(s.y,
                               OutputLayerTraces(p.row, 1.0, out[p.row] - params.at(p), out));
  }
  return PwpFunction::Constant(0.0, 2);
}

}  // namespace mpd
