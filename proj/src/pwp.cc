#include "mpd/pwp.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

#include "mpd/errors.h"

namespace mpd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void RequireFinite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be finite");
  }
}

bool LexLess(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Sum of one row taken from each addend, accumulated in lexicographic row
// order so the result is independent of the addend order.
std::vector<double> SumRowsCanonical(std::vector<std::span<const double>> rows,
                                     std::size_t width) {
  std::sort(rows.begin(), rows.end(), LexLess);
  std::vector<double> total(width, 0.0);
  for (const auto& r : rows) {
    for (std::size_t q = 0; q < width; ++q) total[q] += r[q];
  }
  return total;
}

}  // namespace

PwpFunction::PwpFunction(int degree, std::vector<double> mesh, std::vector<double> coeffs)
    : degree_(degree), mesh_(std::move(mesh)), coeffs_(std::move(coeffs)) {
  if (degree_ < 0) throw DomainError("negative polynomial degree");
  const std::size_t width = static_cast<std::size_t>(degree_) + 1;
  if (coeffs_.size() != (mesh_.size() + 1) * width) {
    throw DomainError("coefficient count does not match mesh size and degree");
  }
  for (double c : coeffs_) RequireFinite(c, "coefficient");
  for (std::size_t i = 0; i < mesh_.size(); ++i) {
    RequireFinite(mesh_[i], "breakpoint");
    if (i > 0 && !(mesh_[i] - mesh_[i - 1] > MeshTolerance(mesh_[i]))) {
      throw DomainError("breakpoints must be strictly increasing and separated");
    }
  }
}

PwpFunction PwpFunction::Constant(double value, int degree) {
  RequireFinite(value, "constant");
  std::vector<double> row(static_cast<std::size_t>(degree) + 1, 0.0);
  row[0] = value;
  return PwpFunction(degree, {}, std::move(row));
}

std::size_t PwpFunction::PieceIndex(double x) const {
  return static_cast<std::size_t>(std::upper_bound(mesh_.begin(), mesh_.end(), x) -
                                  mesh_.begin());
}

double PwpFunction::EvalPiece(std::size_t r, double x) const {
  const auto c = row(r);
  double acc = c[degree_];
  for (int q = degree_ - 1; q >= 0; --q) acc = acc * x + c[q];
  return acc;
}

double PwpFunction::operator()(double x) const {
  RequireFinite(x, "evaluation point");
  return EvalPiece(PieceIndex(x), x);
}

PwlActivation::PwlActivation(std::vector<double> kinks, std::vector<double> slopes,
                             std::vector<double> values)
    : kinks_(std::move(kinks)), slopes_(std::move(slopes)) {
  if (slopes_.size() != kinks_.size() + 1 || values.size() != kinks_.size()) {
    throw DomainError("activation needs one more slope than kinks and one value per kink");
  }
  for (std::size_t i = 0; i < kinks_.size(); ++i) {
    RequireFinite(kinks_[i], "kink");
    RequireFinite(values[i], "kink value");
    if (i > 0 && !(kinks_[i] > kinks_[i - 1])) {
      throw DomainError("kinks must be strictly increasing");
    }
  }
  for (double s : slopes_) RequireFinite(s, "slope");

  intercepts_.resize(slopes_.size());
  if (kinks_.empty()) {
    intercepts_[0] = 0.0;
    return;
  }
  // Piece j passes through the kink on its right; the last piece through
  // the last kink.
  for (std::size_t j = 0; j < kinks_.size(); ++j) {
    intercepts_[j] = values[j] - slopes_[j] * kinks_[j];
  }
  const std::size_t last = kinks_.size();
  intercepts_[last] = values[last - 1] - slopes_[last] * kinks_[last - 1];
  for (std::size_t j = 1; j < kinks_.size(); ++j) {
    const double from_left = slopes_[j] * kinks_[j - 1] + intercepts_[j];
    const double tol = 1e-12 * std::max(1.0, std::abs(values[j - 1]));
    if (std::abs(from_left - values[j - 1]) > tol) {
      throw DomainError("activation is not continuous at a kink");
    }
  }
}

PwlActivation PwlActivation::LeakyHardTanh(double alpha) {
  return PwlActivation({-1.0, 1.0}, {alpha, 1.0, alpha}, {-1.0, 1.0});
}

std::size_t PwlActivation::PieceIndex(double z) const {
  return static_cast<std::size_t>(std::upper_bound(kinks_.begin(), kinks_.end(), z) -
                                  kinks_.begin());
}

double PwlActivation::operator()(double z) const {
  const std::size_t j = PieceIndex(z);
  return slopes_[j] * z + intercepts_[j];
}

double Eval(const PwpFunction& f, double x) { return f(x); }

PwpFunction AffineOf(double a, double b) {
  RequireFinite(a, "slope");
  RequireFinite(b, "offset");
  return PwpFunction(1, {}, {b, a});
}

PwpFunction ScaleAdd(const PwpFunction& f, double a, double b) {
  RequireFinite(a, "scale");
  RequireFinite(b, "shift");
  if (a == 0.0) return PwpFunction::Constant(b, f.degree());
  std::vector<double> coeffs(f.coeffs().begin(), f.coeffs().end());
  const std::size_t width = static_cast<std::size_t>(f.degree()) + 1;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    coeffs[i] *= a;
    if (i % width == 0) coeffs[i] += b;
  }
  return PwpFunction(f.degree(), {f.mesh().begin(), f.mesh().end()}, std::move(coeffs));
}

PwpFunction SumPwp(std::span<const PwpFunction> fs) {
  if (fs.empty()) throw DomainError("sum of an empty list");
  const int degree = fs.front().degree();
  const std::size_t width = static_cast<std::size_t>(degree) + 1;

  std::size_t total_breaks = 0;
  for (const auto& f : fs) {
    if (f.degree() != degree) throw DomainError("sum of functions with mixed degrees");
    total_breaks += f.mesh().size();
  }

  std::vector<std::span<const double>> left_rows, right_rows;
  left_rows.reserve(fs.size());
  right_rows.reserve(fs.size());
  for (const auto& f : fs) {
    left_rows.push_back(f.row(0));
    right_rows.push_back(f.row(f.pieces() - 1));
  }

  // Jump records: breakpoint followed by the coefficient jump across it.
  const std::size_t stride = width + 1;
  std::vector<double> records;
  records.reserve(total_breaks * stride);
  for (const auto& f : fs) {
    for (std::size_t r = 1; r < f.pieces(); ++r) {
      records.push_back(f.mesh()[r - 1]);
      const auto hi = f.row(r);
      const auto lo = f.row(r - 1);
      for (std::size_t q = 0; q < width; ++q) records.push_back(hi[q] - lo[q]);
    }
  }
  std::vector<std::size_t> order(total_breaks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto record = [&](std::size_t k) {
    return std::span<const double>(records).subspan(k * stride, stride);
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return LexLess(record(a), record(b)); });

  std::vector<double> mesh;
  mesh.reserve(total_breaks);
  std::vector<double> coeffs = SumRowsCanonical(std::move(left_rows), width);
  coeffs.reserve((total_breaks + 1) * width);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto rec = record(order[k]);
    const bool merge = !mesh.empty() && rec[0] - mesh.back() <= MeshTolerance(rec[0]);
    if (!merge) {
      mesh.push_back(rec[0]);
      const std::size_t prev = coeffs.size() - width;
      for (std::size_t q = 0; q < width; ++q) coeffs.push_back(coeffs[prev + q]);
    }
    double* row = coeffs.data() + coeffs.size() - width;
    for (std::size_t q = 0; q < width; ++q) row[q] += rec[q + 1];
  }
  if (!mesh.empty()) {
    // The rightmost row is summed directly rather than through the running
    // prefix sum, so the sign of the right tail is not polluted by rounding.
    const auto right = SumRowsCanonical(std::move(right_rows), width);
    std::copy(right.begin(), right.end(), coeffs.end() - static_cast<std::ptrdiff_t>(width));
  }
  return PwpFunction(degree, std::move(mesh), std::move(coeffs));
}

PwpFunction ComposeActivation(const PwlActivation& act, const PwpFunction& inner) {
  if (inner.degree() != 1) throw DomainError("composition needs a piecewise-linear inner function");

  const auto inner_mesh = inner.mesh();
  std::vector<double> cuts(inner_mesh.begin(), inner_mesh.end());
  for (std::size_t r = 0; r < inner.pieces(); ++r) {
    const double b = inner.coeff(r, 0);
    const double a = inner.coeff(r, 1);
    if (a == 0.0) continue;
    const double lo = r == 0 ? -kInf : inner_mesh[r - 1];
    const double hi = r + 1 == inner.pieces() ? kInf : inner_mesh[r];
    for (double kink : act.kinks()) {
      const double root = (kink - b) / a;
      if (root > lo && root < hi) cuts.push_back(root);
    }
  }
  std::sort(cuts.begin(), cuts.end());

  // Drop cuts that would leave a subdomain narrower than MeshTolerance.
  std::vector<double> mesh;
  mesh.reserve(cuts.size());
  for (double c : cuts) {
    if (mesh.empty() || c - mesh.back() > MeshTolerance(c)) mesh.push_back(c);
  }

  std::vector<double> coeffs;
  coeffs.reserve(2 * (mesh.size() + 1));
  for (std::size_t j = 0; j <= mesh.size(); ++j) {
    double probe;
    if (mesh.empty()) {
      probe = 0.0;
    } else if (j == 0) {
      probe = mesh.front() - 1.0;
    } else if (j == mesh.size()) {
      probe = mesh.back() + 1.0;
    } else {
      probe = 0.5 * (mesh[j - 1] + mesh[j]);
    }
    const std::size_t r = inner.PieceIndex(probe);
    const double b = inner.coeff(r, 0);
    const double a = inner.coeff(r, 1);
    const std::size_t k = act.PieceIndex(a * probe + b);
    coeffs.push_back(act.slope(k) * b + act.intercept(k));
    coeffs.push_back(act.slope(k) * a);
  }
  return PwpFunction(1, std::move(mesh), std::move(coeffs));
}

PwpFunction SquareResidual(double y, const PwpFunction& f) {
  RequireFinite(y, "target");
  if (f.degree() != 1) throw DomainError("squared residual needs a piecewise-linear function");
  std::vector<double> coeffs;
  coeffs.reserve(3 * f.pieces());
  for (std::size_t r = 0; r < f.pieces(); ++r) {
    const double b = f.coeff(r, 0);
    const double a = f.coeff(r, 1);
    const double resid = y - b;
    coeffs.push_back(resid * resid);
    coeffs.push_back(-2.0 * a * resid);
    coeffs.push_back(a * a);
  }
  return PwpFunction(2, {f.mesh().begin(), f.mesh().end()}, std::move(coeffs));
}

MinResult GlobalMin(const PwpFunction& f, double hint) {
  if (f.degree() > 2) throw DomainError("global minimization supports degree <= 2");
  RequireFinite(hint, "hint");

  const std::size_t last = f.pieces() - 1;
  {
    const double c2 = f.coeff(0, 2);
    const double c1 = f.coeff(0, 1);
    if (c2 < 0.0 || (c2 == 0.0 && c1 > 0.0)) throw UnboundedBelow("left tail decreases to -inf");
  }
  {
    const double c2 = f.coeff(last, 2);
    const double c1 = f.coeff(last, 1);
    if (c2 < 0.0 || (c2 == 0.0 && c1 < 0.0)) throw UnboundedBelow("right tail decreases to -inf");
  }

  struct Candidate {
    double at;
    double value;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(2 * f.pieces() + 1);
  candidates.push_back({hint, f(hint)});
  for (double b : f.mesh()) candidates.push_back({b, f(b)});
  const auto mesh = f.mesh();
  for (std::size_t r = 0; r <= last; ++r) {
    const double c2 = f.coeff(r, 2);
    if (!(c2 > 0.0)) continue;
    const double vertex = -f.coeff(r, 1) / (2.0 * c2);
    if (!std::isfinite(vertex)) continue;
    const bool above_lo = r == 0 || vertex >= mesh[r - 1];
    const bool below_hi = r == last || vertex < mesh[r];
    if (above_lo && below_hi) candidates.push_back({vertex, f.EvalPiece(r, vertex)});
  }

  double best = kInf;
  for (const auto& c : candidates) best = std::min(best, c.value);
  const double tie = 1e-10 * std::max(1.0, std::abs(best));

  const Candidate* pick = nullptr;
  for (const auto& c : candidates) {
    if (c.value > best + tie) continue;
    if (pick == nullptr) {
      pick = &c;
      continue;
    }
    const double d_new = std::abs(c.at - hint);
    const double d_old = std::abs(pick->at - hint);
    if (d_new < d_old || (d_new == d_old && c.at < pick->at)) pick = &c;
  }
  return {pick->at, pick->value, f.PieceIndex(pick->at)};
}

void WriteText(std::ostream& out, const PwpFunction& f) {
  char buf[40];
  out << f.degree() << ' ' << f.pieces() << '\n';
  for (double b : f.mesh()) {
    std::snprintf(buf, sizeof(buf), "%.17g", b);
    out << buf << '\n';
  }
  for (std::size_t r = 0; r < f.pieces(); ++r) {
    const auto row = f.row(r);
    for (std::size_t q = 0; q < row.size(); ++q) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[q]);
      out << (q ? " " : "") << buf;
    }
    out << '\n';
  }
}

PwpFunction ReadText(std::istream& in) {
  int degree = -1;
  std::size_t pieces = 0;
  if (!(in >> degree >> pieces) || degree < 0 || pieces == 0) {
    throw DomainError("malformed piecewise polynomial header");
  }
  std::vector<double> mesh(pieces - 1);
  for (double& b : mesh) {
    if (!(in >> b)) throw DomainError("truncated breakpoint list");
  }
  std::vector<double> coeffs(pieces * (static_cast<std::size_t>(degree) + 1));
  for (double& c : coeffs) {
    if (!(in >> c)) throw DomainError("truncated coefficient list");
  }
  return PwpFunction(degree, std::move(mesh), std::move(coeffs));
}

}  // namespace mpd
