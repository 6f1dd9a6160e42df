#ifndef MPD_DATASET_H_
#define MPD_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpd/network.h"

namespace mpd {

struct ColumnStats {
  double mean = 0.0;
  double stddev = 1.0;
};

enum class SyntheticKind { kTeacherPwl, kTerrain };

struct Provenance {
  std::string source;  // "csv" or "synthetic"
  std::string detail;  // path, or generator kind
  std::uint64_t seed = 0;
};

// Input/output samples plus the per-dimension transform that produced them
// (identity for raw data).
struct Dataset {
  std::vector<Sample> samples;
  std::vector<ColumnStats> x_stats;
  std::vector<ColumnStats> y_stats;
  Provenance provenance;

  std::size_t size() const { return samples.size(); }
  std::size_t d_in() const { return samples.empty() ? 0 : samples.front().x.size(); }
  std::size_t d_out() const { return samples.empty() ? 0 : samples.front().y.size(); }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Comma-separated decimal rows; the listed columns become x and y. Throws
// DataError naming the line (1-based) and column (0-based) of a bad cell.
Dataset LoadCsv(std::istream& in, std::span<const std::size_t> x_columns,
                std::span<const std::size_t> y_columns, bool has_header);
Dataset LoadCsv(const std::string& path, std::span<const std::size_t> x_columns,
                std::span<const std::size_t> y_columns, bool has_header);

// Shifts and scales every input and output dimension to empirical mean 0
// and (population) variance 1. Throws DataError for S < 2 or a constant
// dimension.
Dataset Standardize(const Dataset& raw);

// Maps a standardized sample back to raw units.
Sample Unstandardize(const Dataset& standardized, const Sample& s);

// Seeded permutation; the first round(0.8 * S) indices train.
Split Split80_20(std::size_t n, std::uint64_t seed);

std::vector<Sample> Select(const Dataset& data, std::span<const std::size_t> indices);

struct SyntheticOptions {
  std::size_t d_out = 1;
  // Teacher network width (teacher_pwl).
  std::size_t teacher_hidden = 8;
  // Number of triangle-wave ridges (terrain).
  std::size_t ridges = 12;
  // Gaussian noise added to outputs; terrain only by default.
  double noise = 0.01;
};

// teacher_pwl: x ~ N(0, I), y = teacher(x) for a random leaky-hard-tanh
// network (noiseless, so the teacher attains zero loss).
// terrain: x ~ U(-1, 1)^d_in, y = sum of random-frequency triangle waves of
// random projections of x plus Gaussian noise. Raw (unstandardized) output.
Dataset SyntheticRugged(SyntheticKind kind, std::size_t n, std::size_t d_in, std::uint64_t seed,
                        const SyntheticOptions& options = {});

// The teacher used by SyntheticRugged(kTeacherPwl, ...) for the same
// arguments.
NetworkParams TeacherNetwork(std::size_t d_in, std::uint64_t seed,
                             const SyntheticOptions& options = {});

// Writes standardization constants, one "x|y index mean stddev" per line.
void WriteStats(std::ostream& out, const Dataset& data);

}  // namespace mpd

#endif  // MPD_DATASET_H_
