#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace schottky {

using cdouble = std::complex<double>;

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr double kPi = std::numbers::pi_v<double>;
inline const cdouble kI{0.0, 1.0};
inline const cdouble kTwoPiI{0.0, 2.0 * kPi};

// Bilinear (unconjugated) pairing.  Eigen's dot() conjugates its left factor,
// which is never what the quadratic forms here want.
inline cdouble bilinear(const VectorXcd& a, const VectorXcd& b) {
  return (a.transpose() * b)(0, 0);
}
inline cdouble bilinear(const VectorXcd& a, const VectorXd& b) {
  return (a.transpose() * b.cast<cdouble>())(0, 0);
}

// Error taxonomy.  Callers distinguish recoverable numerical trouble
// (truncation, near-divisor, collision, obstruction) from misuse.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested tolerance unreachable within the lattice radius cap.
struct TruncationError : NumericError {
  using NumericError::NumericError;
};

// Theta value too small relative to the series scale to divide by safely.
struct NearDivisorError : NumericError {
  using NumericError::NumericError;
};

// Particle collision (or near collision) during pole dynamics.
struct CollisionError : NumericError {
  CollisionError(const std::string& msg, double y_at, std::vector<std::pair<int, int>> close)
      : NumericError(msg), y(y_at), pairs(std::move(close)) {}
  double y;
  std::vector<std::pair<int, int>> pairs;
};

// First-order pole survived an antiderivative: the formal recursion stops.
// residues holds the per-pole residue at the jet center y = 0; strengths
// holds the largest residue coefficient across the whole jet.  A pure
// velocity defect leaves the center value near zero (positions and
// accelerations there are still consistent) while the strength sees it.
struct ObstructionError : NumericError {
  ObstructionError(const std::string& msg, int at_step, std::vector<cdouble> res,
                   std::vector<double> sup)
      : NumericError(msg), step(at_step), residues(std::move(res)),
        strengths(std::move(sup)) {}
  int step;
  std::vector<cdouble> residues;
  std::vector<double> strengths;
};

// Numerical contour/continuation could not be completed reliably.
struct PathError : NumericError {
  using NumericError::NumericError;
};

// An internal convergence estimate exceeded its target (quadrature doubling,
// series truncation inside a composite routine).
struct PrecisionError : NumericError {
  using NumericError::NumericError;
};

// Input violates a structural convention (symmetry, positivity, ordering).
struct ConventionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Configuration so degenerate that results would be meaningless
// (coalescing branch points, poles closer than the resolution floor).
struct DegeneracyError : NumericError {
  using NumericError::NumericError;
};

// Too few usable sample points to state a residual: a near-divisor guard
// discarded most of a grid, or no divisor point could be located at all.
struct SamplingError : NumericError {
  using NumericError::NumericError;
};

// Plain misuse of an interface (dimension mismatch, bad order).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Symmetric g x g period matrix with positive definite imaginary part.
// Validation happens once at construction; the solver and the smallest
// eigenvalue of Im B are cached for the summation engine.
class RiemannMatrix {
 public:
  explicit RiemannMatrix(MatrixXcd B);

  int g() const { return static_cast<int>(B_.rows()); }
  const MatrixXcd& B() const { return B_; }
  const MatrixXd& Y() const { return Y_; }
  double lambda_min() const { return lambda_min_; }

  // Solves Y c = rhs with the cached Cholesky factorization.
  VectorXd solve_Y(const VectorXd& rhs) const { return llt_.solve(rhs); }

 private:
  MatrixXcd B_;
  MatrixXd Y_;
  Eigen::LLT<MatrixXd> llt_;
  double lambda_min_ = 0.0;
};

// Controls for the certified lattice summation.
struct TruncationSpec {
  double tol = 1e-12;       // absolute bound on the discarded tail
  int radius_cap = 60;      // largest admissible summation radius
  double divisor_floor = 1e-10;  // |theta|/scale below this counts as "on the divisor"
};

// Half-integer theta characteristic: entries of eps and delta are 0 or 1/2.
struct Characteristic {
  VectorXd eps;
  VectorXd delta;
};

// Wave-vector block attached to a curve: directions U, V, W and a generic
// translate Z, plus the optional one-point data (A, p, E) used by the flex
// identities.  `gauge` records the rescaling lambda applied when U was
// normalized; p and E were scaled by lambda and lambda^2 along with it.
struct KPVectors {
  VectorXcd U, V, W, Z;
  cdouble gauge{1.0, 0.0};

  bool has_flex = false;
  VectorXcd A;
  cdouble p{0.0, 0.0};
  cdouble E{0.0, 0.0};
};

// snprintf-backed shortest-roundtrip formatting (%.17g), used everywhere a
// number reaches a report or a file so output is byte-stable across runs.
std::string format_double(double x);
std::string format_complex(cdouble z);

}  // namespace schottky
