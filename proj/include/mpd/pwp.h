#ifndef MPD_PWP_H_
#define MPD_PWP_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mpd {

// Two breakpoints closer than this are treated as one.
inline double MeshTolerance(double at);

// A piecewise polynomial of one real variable.
//
// The real line is cut by R-1 strictly increasing finite breakpoints into R
// subdomains; the first and last subdomains extend to -inf and +inf. On
// subdomain r the function is sum_q coeff(r, q) * x^q for q = 0..degree.
// Subdomains are half-open on the right, so a breakpoint belongs to the
// subdomain on its right.
//
// Instances are immutable values.
class PwpFunction {
 public:
  // `coeffs` holds R rows of degree+1 coefficients, lowest power first,
  // where R = mesh.size() + 1. Throws DomainError on any broken invariant.
  PwpFunction(int degree, std::vector<double> mesh, std::vector<double> coeffs);

  static PwpFunction Constant(double value, int degree = 1);

  int degree() const { return degree_; }
  std::size_t pieces() const { return mesh_.size() + 1; }
  std::span<const double> mesh() const { return mesh_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<const double> row(std::size_t r) const {
    const std::size_t width = static_cast<std::size_t>(degree_) + 1;
    return std::span<const double>(coeffs_).subspan(r * width, width);
  }
  double coeff(std::size_t r, int q) const {
    return q > degree_ ? 0.0 : coeffs_[r * (static_cast<std::size_t>(degree_) + 1) + q];
  }

  // Index of the subdomain containing x.
  std::size_t PieceIndex(double x) const;

  // Value of subdomain r's polynomial at x, whether or not x lies in it.
  double EvalPiece(std::size_t r, double x) const;

  // Throws DomainError for non-finite x.
  double operator()(double x) const;

  bool operator==(const PwpFunction&) const = default;

 private:
  int degree_;
  std::vector<double> mesh_;
  std::vector<double> coeffs_;
};

// Continuous piecewise-linear activation. Piece j covers
// [kinks[j-1], kinks[j]) and has the given slope; values[j] is the
// activation at kinks[j].
class PwlActivation {
 public:
  PwlActivation(std::vector<double> kinks, std::vector<double> slopes,
                std::vector<double> values);

  // Identity on [-1, 1], slope alpha outside, continuous.
  static PwlActivation LeakyHardTanh(double alpha = 0.01);

  std::span<const double> kinks() const { return kinks_; }
  std::size_t pieces() const { return slopes_.size(); }
  double slope(std::size_t j) const { return slopes_[j]; }
  double intercept(std::size_t j) const { return intercepts_[j]; }

  std::size_t PieceIndex(double z) const;
  double operator()(double z) const;
  // Derivative; at a kink the right piece's slope.
  double Derivative(double z) const { return slopes_[PieceIndex(z)]; }

 private:
  std::vector<double> kinks_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
};

struct MinResult {
  double argmin;
  double min_value;
  std::size_t subdomain_index;
};

inline double MeshTolerance(double at) {
  const double mag = at < 0 ? -at : at;
  return 1e-12 * (mag > 1.0 ? mag : 1.0);
}

double Eval(const PwpFunction& f, double x);

// b + a*x on the whole line (degree 1).
PwpFunction AffineOf(double a, double b);

// a*f + b on the mesh of f. a == 0 collapses to the constant b.
PwpFunction ScaleAdd(const PwpFunction& f, double a, double b);

// Exact pointwise sum of functions sharing one degree.
//
// Each addend contributes one (breakpoint, coefficient jump) record per
// breakpoint; the records of all addends are sorted by breakpoint and
// prefix-summed from the sum of the leftmost rows. Breakpoints within
// MeshTolerance are merged with their jumps added. The result does not
// depend on the order of `fs`, bit for bit.
PwpFunction SumPwp(std::span<const PwpFunction> fs);

// act(inner(x)) for a piecewise-linear `inner`. Every crossing of inner
// with a kink of act becomes a breakpoint of the result.
PwpFunction ComposeActivation(const PwlActivation& act, const PwpFunction& inner);

// (y - f(x))^2 for a piecewise-linear f; same mesh, degree 2.
PwpFunction SquareResidual(double y, const PwpFunction& f);

// Global minimum of a piecewise polynomial of degree <= 2.
//
// Candidates are the hint, every breakpoint, and every interior vertex of a
// convex piece. Values within 1e-10 * max(1, |min|) of the least are ties,
// broken by distance to `hint` and then by the smaller argument. A function
// that is constant everywhere returns the hint. Throws UnboundedBelow when
// either tail decreases without bound.
MinResult GlobalMin(const PwpFunction& f, double hint);

// Text form: "Q R", the R-1 breakpoints, then R rows of Q+1 coefficients,
// all with 17 significant digits.
void WriteText(std::ostream& out, const PwpFunction& f);
PwpFunction ReadText(std::istream& in);

}  // namespace mpd

#endif  // MPD_PWP_H_
