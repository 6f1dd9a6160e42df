#include "mpd/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "mpd/errors.h"
#include "mpd/random.h"

namespace mpd {
namespace {

enum Stream : std::uint64_t { kSplitStream = 11, kTeacherStream = 12, kInputStream = 13 };

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitCells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double ParseCell(std::string_view cell, std::size_t line_no, std::size_t col) {
  double v = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                    ": not a finite number: '" + std::string(cell) + "'");
  }
  return v;
}

std::vector<ColumnStats> ComputeStats(const std::vector<Sample>& samples, bool inputs) {
  const std::size_t dims = inputs ? samples.front().x.size() : samples.front().y.size();
  const double n = static_cast<double>(samples.size());
  std::vector<ColumnStats> stats(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double sum = 0.0;
    for (const Sample& s : samples) sum += inputs ? s.x[d] : s.y[d];
    const double mean = sum / n;
    double sq = 0.0;
    for (const Sample& s : samples) {
      const double dev = (inputs ? s.x[d] : s.y[d]) - mean;
      sq += dev * dev;
    }
    const double stddev = std::sqrt(sq / n);
    if (!(stddev > 1e-300) || stddev <= 1e-14 * std::abs(mean)) {
      throw DataError(std::string(inputs ? "input" : "output") + " dimension " +
                      std::to_string(d) + " has zero variance");
    }
    stats[d] = {mean, stddev};
  }
  return stats;
}

double Triangle(double t) {
  // Period 1, range [-1, 1].
  return 4.0 * std::abs(t - std::floor(t + 0.5)) - 1.0;
}

}  // namespace

Dataset LoadCsv(std::istream& in, std::span<const std::size_t> x_columns,
                std::span<const std::size_t> y_columns, bool has_header) {
  if (x_columns.empty() || y_columns.empty()) throw DataError("no input or output columns given");
  std::size_t needed = 0;
  for (std::size_t c : x_columns) needed = std::max(needed, c + 1);
  for (std::size_t c : y_columns) needed = std::max(needed, c + 1);

  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = SplitCells(line);
    if (cells.size() < needed) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(needed) + " columns, found " + std::to_string(cells.size()));
    }
    Sample s;
    s.x.reserve(x_columns.size());
    s.y.reserve(y_columns.size());
    for (std::size_t c : x_columns) s.x.push_back(ParseCell(cells[c], line_no, c));
    for (std::size_t c : y_columns) s.y.push_back(ParseCell(cells[c], line_no, c));
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw DataError("no data rows");
  data.x_stats.assign(x_columns.size(), ColumnStats{});
  data.y_stats.assign(y_columns.size(), ColumnStats{});
  data.provenance = {"csv", "", 0};
  return data;
}

Dataset LoadCsv(const std::string& path, std::span<const std::size_t> x_columns,
                std::span<const std::size_t> y_columns, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Dataset data = LoadCsv(in, x_columns, y_columns, has_header);
  data.provenance.detail = path;
  return data;
}

Dataset Standardize(const Dataset& raw) {
  if (raw.size() < 2) throw DataError("standardization needs at least two samples");
  const auto xs = ComputeStats(raw.samples, true);
  const auto ys = ComputeStats(raw.samples, false);
  Dataset out;
  out.provenance = raw.provenance;
  out.samples.reserve(raw.size());
  for (const Sample& s : raw.samples) {
    Sample t = s;
    for (std::size_t d = 0; d < xs.size(); ++d) t.x[d] = (s.x[d] - xs[d].mean) / xs[d].stddev;
    for (std::size_t d = 0; d < ys.size(); ++d) t.y[d] = (s.y[d] - ys[d].mean) / ys[d].stddev;
    out.samples.push_back(std::move(t));
  }
  // Compose with any transform already applied to `raw`.
  out.x_stats.resize(xs.size());
  out.y_stats.resize(ys.size());
  for (std::size_t d = 0; d < xs.size(); ++d) {
    const ColumnStats prior = d < raw.x_stats.size() ? raw.x_stats[d] : ColumnStats{};
    out.x_stats[d] = {prior.mean + prior.stddev * xs[d].mean, prior.stddev * xs[d].stddev};
  }
  for (std::size_t d = 0; d < ys.size(); ++d) {
    const ColumnStats prior = d < raw.y_stats.size() ? raw.y_stats[d] : ColumnStats{};
    out.y_stats[d] = {prior.mean + prior.stddev * ys[d].mean, prior.stddev * ys[d].stddev};
  }
  return out;
}

Sample Unstandardize(const Dataset& standardized, const Sample& s) {
  Sample raw = s;
  for (std::size_t d = 0; d < raw.x.size(); ++d) {
    raw.x[d] = standardized.x_stats[d].mean + standardized.x_stats[d].stddev * s.x[d];
  }
  for (std::size_t d = 0; d < raw.y.size(); ++d) {
    raw.y[d] = standardized.y_stats[d].mean + standardized.y_stats[d].stddev * s.y[d];
  }
  return raw;
}

Split Split80_20(std::size_t n, std::uint64_t seed) {
  if (n < 5) throw DataError("an 80/20 split needs at least 5 samples");
  Rng rng(DeriveSeed(seed, kSplitStream));
  auto perm = rng.Permutation(n);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  Split split;
  split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return split;
}

std::vector<Sample> Select(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.samples.at(i));
  return out;
}

NetworkParams TeacherNetwork(std::size_t d_in, std::uint64_t seed,
                             const SyntheticOptions& options) {
  NetworkShape shape{d_in, options.teacher_hidden, options.d_out,
                     PwlActivation::LeakyHardTanh()};
  Rng rng(DeriveSeed(seed, kTeacherStream));
  std::vector<double> flat(ParamCount(shape));
  // Wide enough that the N(0, I) inputs drive many units past the kinks.
  for (double& v : flat) v = 1.5 * rng.Normal();
  return NetworkParams(shape, std::move(flat));
}

Dataset SyntheticRugged(SyntheticKind kind, std::size_t n, std::size_t d_in, std::uint64_t seed,
                        const SyntheticOptions& options) {
  if (n == 0 || d_in == 0 || options.d_out == 0) throw DataError("empty synthetic dataset");
  Dataset data;
  data.samples.reserve(n);
  Rng rng(DeriveSeed(seed, kInputStream));

  if (kind == SyntheticKind::kTeacherPwl) {
    const NetworkParams teacher = TeacherNetwork(d_in, seed, options);
    for (std::size_t s = 0; s < n; ++s) {
      Sample sample;
      sample.x.resize(d_in);
      for (double& v : sample.x) v = rng.Normal();
      sample.y = Forward(teacher, sample.x);
      data.samples.push_back(std::move(sample));
    }
    data.provenance = {"synthetic", "teacher_pwl", seed};
  } else {
    struct Ridge {
      std::vector<double> direction;
      double frequency, phase, amplitude;
    };
    std::vector<std::vector<Ridge>> ridges(options.d_out);
    for (auto& per_output : ridges) {
      for (std::size_t k = 0; k < options.ridges; ++k) {
        Ridge r;
        r.direction.resize(d_in);
        double norm = 0.0;
        for (double& v : r.direction) {
          v = rng.Normal();
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : r.direction) v /= norm;
        r.frequency = rng.Uniform(1.0, 6.0);
        r.phase = rng.Uniform01();
        r.amplitude = rng.Uniform(0.2, 1.0) / std::sqrt(r.frequency);
        per_output.push_back(std::move(r));
      }
    }
    for (std::size_t s = 0; s < n; ++s) {
      Sample sample;
      sample.x.resize(d_in);
      for (double& v : sample.x) v = rng.Uniform(-1.0, 1.0);
      sample.y.assign(options.d_out, 0.0);
      for (std::size_t o = 0; o < options.d_out; ++o) {
        for (const Ridge& r : ridges[o]) {
          double proj = 0.0;
          for (std::size_t i = 0; i < d_in; ++i) proj += r.direction[i] * sample.x[i];
          sample.y[o] += r.amplitude * Triangle(r.frequency * proj + r.phase);
        }
        sample.y[o] += options.noise * rng.Normal();
      }
      data.samples.push_back(std::move(sample));
    }
    data.provenance = {"synthetic", "terrain", seed};
  }
  data.x_stats.assign(d_in, ColumnStats{});
  data.y_stats.assign(options.d_out, ColumnStats{});
  return data;
}

void WriteStats(std::ostream& out, const Dataset& data) {
  char buf[96];
  for (std::size_t d = 0; d < data.x_stats.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "x %zu %.17g %.17g\n", d, data.x_stats[d].mean,
                  data.x_stats[d].stddev);
    out << buf;
  }
  for (std::size_t d = 0; d < data.y_stats.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "y %zu %.17g %.17g\n", d, data.y_stats[d].mean,
                  data.y_stats[d].stddev);
    out << buf;
  }
}

}  // namespace mpd
