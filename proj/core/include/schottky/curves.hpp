#pragma once

#include <string>
#include <utility>
#include <vector>

#include "schottky/types.hpp"

namespace schottky {

// Odd hyperelliptic model y^2 = prod (x - e_i) with 3 (genus 1) or 5
// (genus 2) branch points, taken in the order supplied: consecutive points
// bound the cut segments the homology basis is built from.  One Weierstrass
// point sits at infinity; the local coordinate there is t with x = t^-2,
// y = sigma t^-(2g+1) (1 + O(t^2)).
struct HyperellipticCurve {
  std::vector<cdouble> branch_points;

  int genus() const { return (static_cast<int>(branch_points.size()) - 1) / 2; }
  double diameter() const;
};

// Periods and puncture expansions of one curve.  Let L_j be the loop around
// the consecutive pair {e_j, e_{j+1}}; the symplectic basis is
//   genus 1:  a1 = L1,  b1 = L2
//   genus 2:  a1 = L1, a2 = L3,  b1 = L2 + L4,  b2 = L4
// with the overall b-orientation fixed so Im B is positive definite.
//
// Period matrices are indexed [monomial m][cycle i] for the differentials
// x^m dx / y, so the normalized matrix is B = a_periods^-1 * b_periods.  The
// _ext variants carry one extra monomial row (m = g) used to build the
// second-kind differentials.  jet_coeffs holds the expansion of the
// normalized differentials at the puncture: omega_i = sum_m jet_coeffs(i, m)
// t^m dt, nonzero only for even m because x and y are even/odd in t.
struct PeriodData {
  HyperellipticCurve curve;
  cdouble ray_dir;       // common branch-cut direction of the sqrt factors
  cdouble anchor_t;      // local coordinate of the reference point Q near the puncture
  cdouble sheet_sign;    // sigma relating the global branch of y to the t-expansion
  MatrixXcd a_periods;   // g x g
  MatrixXcd b_periods;   // g x g
  MatrixXcd a_periods_ext;  // (g+1) x g
  MatrixXcd b_periods_ext;  // (g+1) x g
  MatrixXcd normalization;  // N = a_periods^-1: omega_i = sum_m N(i,m) x^m dx/y
  MatrixXcd jet_coeffs;     // g x kJetColumns
  // t^1 coefficient of the normalized second-kind integral with pole d(1/t).
  // It is the additive constant the field convention here absorbs, so it
  // enters both the third flow vector and the spectral offset.
  cdouble omega1_const;
  RiemannMatrix B;
  double quad_error = 0.0;  // doubling estimate of the quadrature error
  int quad_order = 0;

  int genus() const { return curve.genus(); }
};

inline constexpr int kJetColumns = 13;

// Segment quadrature of all loop periods.  Gauss-Chebyshev nodes absorb the
// inverse-sqrt endpoint singularities; the off-segment sqrt factors are
// evaluated on a global branch whose cuts leave every branch point along the
// common ray direction, so they stay continuous across each segment.  Throws
// PrecisionError when the order-halving estimate exceeds 1e-7, ConventionError
// when the resulting B is not symmetric or Im B is indefinite (reorder the
// branch points in that case), DegeneracyError for near-coalescing points.
PeriodData hyperelliptic_periods(const HyperellipticCurve& curve, int quad_order = 200);

// Flow directions from the puncture jets: U and V proportional to the t^0
// and t^1 coefficient columns, W to the t^2 column plus 3 * omega1_const
// times the t^0 column (the boost absorbing the additive field constant).
// The proportionality constants are fixed once by trying the finite
// convention set {+-1, +-i per order, extra 1/3 on the
// third flow} on a fixed reference curve and keeping the unique gauge class
// whose flow field satisfies the dispersive balance; the winner is cached for
// the process.  Output is gauge-normalized: ||U|| = 1 with the first
// nonvanishing component real positive, V and W rescaled by gauge^2, gauge^3.
// Throws ConventionError (listing every tried convention) if no candidate or
// more than one gauge class passes.
KPVectors kp_vectors(const PeriodData& pd);

// Second-kind differential generating the x-flow: principal part d(1/t) at
// the puncture, zero a-periods.  x_coeffs are its monomial coefficients
// (sum_m x_coeffs[m] x^m dx / y); b_periods are its b-cycle integrals, equal
// to 2 pi i times the unscaled x-direction vector.  Used to pin the scale
// between jet conventions and genuine period geometry, and exposed so tests
// can compare the two routes.
struct XFlowDifferential {
  VectorXcd x_coeffs;
  VectorXcd b_periods;
};
XFlowDifferential x_flow_differential(const PeriodData& pd);

// One-point data of the wave function at P = (x_P, tracked sheet): the Abel
// image A of P from the puncture, the x-flow integral p, and the spectral
// value E = mu^2 (x_P + 2 omega1_const), each rescaled to match the
// convention and gauge of kp_vectors(pd) so the triple can be used directly
// with those vectors.  The integration path runs
// from a reference point Q near the puncture straight through the given
// waypoints to x_P, continuing y by continuity; the arrival sheet is the
// tracked one, so reaching the other sheet takes a waypoint detour winding
// around one branch point.  Throws PathError when a leg passes too close to a
// branch point (supply waypoints to route around it).
KPVectors flex_data(const PeriodData& pd, cdouble x_P,
                    const std::vector<cdouble>& waypoints = {});

// Normalized one-point wave function of a genus-1 curve,
//   psi(x, P) = theta(A(P) + U x + Z) / theta(U x + Z) * exp(p x),
// built from vecs = flex_data(pd, x_P) with the caller's choice of Z filled
// in.  Throws NearDivisorError when the denominator theta is too small.
cdouble baker_akhiezer_genus1(const PeriodData& pd, const KPVectors& vecs, double x,
                              const TruncationSpec& trunc = {});

// Elliptic flow block without any curve: B = [tau], U = (1), V = (0), and W
// fixed by the traveling-wave balance of the flow equation, obtained from the
// Weierstrass form of the field (the fitted additive constant c0 enters as
// W = -3/2 c0 U).  Throws ConventionError when Im tau <= 0.
std::pair<RiemannMatrix, KPVectors> genus1_data(cdouble tau);

// Text description of a curve: lines `branch_point = <re> <im>` (one per
// point, in order) and `quad_order = <n>`, with # comments and blank lines
// ignored.  Unknown keys are rejected.
struct CurveFile {
  HyperellipticCurve curve;
  int quad_order = 200;
};
CurveFile parse_curve_file(const std::string& text);
std::string render_curve_file(const CurveFile& file);

// Deterministic JSON rendering of the period data and flow vectors: complex
// numbers as [re, im] pairs, matrices as row-major nested arrays, every
// number through the shortest-roundtrip formatter.  Field names: a_periods,
// b_periods, b_matrix, jet_coeffs, kp_vectors (+ flex when present).
std::string period_data_json(const PeriodData& pd, const KPVectors& vecs);

}  // namespace schottky
