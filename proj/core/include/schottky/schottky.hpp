#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "schottky/report.hpp"
#include "schottky/theta.hpp"
#include "schottky/types.hpp"

namespace schottky {

// Cartesian evaluation grid for the flow-equation residual.
struct GridSpec {
  std::vector<double> xs, ys, ts;
};

// Pointwise defect of 3u_yy = (4u_t + 6uu_x - u_xxx)_x for the quasi-periodic
// field built from (B, vecs), aggregated over the grid.  Points where the
// theta argument lands too close to the divisor are skipped and counted; more
// than half skipped raises SamplingError because the statistics would not
// mean anything.
ResidualReport kp_residual(const RiemannMatrix& B, const KPVectors& vecs,
                           const GridSpec& grid, double tol = 1e-6,
                           const TruncationSpec& trunc = {});

// The flow equation for the field is equivalent to one linear condition per
// half-integer characteristic on fourth derivatives of the second-order theta
// constants:
//   dU^4 T[eps] - 4 dU dW T[eps] + 3 dV^2 T[eps] + c T[eps] = 0,
// with a single constant c shared by all 2^g rows.  The coefficients 4 and 3
// belong to the flow scaling used by u_field and kp_vectors; literature
// statements that show coefficient 1 on all three terms normalize V and W
// differently.  The constant is fitted by least squares and the per-row
// defect of the fitted system is reported.
struct DubrovinResult {
  cdouble c{0.0, 0.0};
  ResidualReport report;
};
DubrovinResult dubrovin_residual(const RiemannMatrix& B, const KPVectors& vecs,
                                 double tol = 1e-6, const TruncationSpec& trunc = {});

// Numerically located points of the theta divisor.  theta_ratio is |theta|
// relative to the series scale at the point (the zero quality), slope is the
// same ratio for the directional derivative along the U supplied at sampling
// time, a proxy for the distance to the sublocus where that derivative also
// vanishes.  Consumers apply their own floor to slope; nothing is dropped
// here.
struct DivisorSample {
  std::vector<VectorXcd> points;
  std::vector<double> theta_ratio;
  std::vector<double> slope;
  int lines_failed = 0;
  std::uint64_t seed = 0;
};

// Draws n random complex lines through the torus, localizes one zero of theta
// per line by a coarse scan, polishes it by a damped Newton iteration, and
// certifies the result with a winding-number count on a small circle.  Lines
// where this fails are counted in lines_failed; failure of every line raises
// SamplingError.
DivisorSample sample_divisor(const RiemannMatrix& B, const VectorXcd& U, int n,
                             std::uint64_t seed, const TruncationSpec& trunc = {});

// Canonical representative of the scaling and drift freedom
// (U, V) -> (lambda U, lambda^2 V + c lambda U): U is scaled to unit norm
// with its first nonvanishing component real positive, and the component of
// V along U is removed (Hermitian projection, which also zeroes the real
// inner product of the interleaved real/imaginary coordinates).
std::pair<VectorXcd, VectorXcd> gauge_fix_uv(const VectorXcd& U, const VectorXcd& V);

// On-divisor criterion: with d1, d2 the derivatives along U and V,
//   [(d2 th)^2 - (d1^2 th)^2] d1^2 th
//     + 2 [d1^2 th d1^3 th - d2 th d1 d2 th] d1 th
//     + [d2^2 th - d1^4 th] (d1 th)^2 = 0
// at every sampled divisor point.  The combination is homogeneous of degree
// six under (U, V) -> (lambda U, lambda^2 V) and exactly invariant under
// V -> V + cU, so inputs are gauge-fixed first and the normalized residual is
// a gauge invariant.  Points whose U-derivative falls below 1e-6 of the
// series scale sit too close to the singular sublocus the criterion excludes;
// they are left out of the statistics and counted in details.
ResidualReport divisor_eq_residual(const RiemannMatrix& B, const VectorXcd& U,
                                   const VectorXcd& V, const DivisorSample& sample,
                                   double tol = 1e-6, const TruncationSpec& trunc = {});

// One-point criterion on second-order theta functions at half the Abel image:
//   (dV - dU^2 - 2p dU + (E - p^2)) T[eps](A/2) = 0 for all 2^g eps.
// The operator picks up exactly lambda^2 under the joint rescaling
// (lambda U, lambda^2 V, A, lambda p, lambda^2 E), so the normalized residual
// needs no gauge fixing.  A within 1e-8 of a lattice point is flagged in
// details as degenerate (the system then degenerates to an identity).
ResidualReport flex_residual(const RiemannMatrix& B, const VectorXcd& U,
                             const VectorXcd& V, const VectorXcd& A, cdouble p,
                             cdouble E, double tol = 1e-5,
                             const TruncationSpec& trunc = {});

// Search for directions (U, V) making the on-divisor criterion vanish, given
// only the period matrix.  Pipeline: the criterion is linear in the symmetric
// matrix S = V V^T once U is fixed, so a simplex search over U alone (with S
// fitted by least squares at every step) locates the valley cheaply; a rank
// one factor of the fitted S seeds a joint simplex refinement over (U, V),
// finished by a damped Gauss-Newton polish on the per-point residuals.
// The reported residual is always the plain divisor_eq_residual of the
// returned pair; the relaxation only steers the iteration.  A run that ends
// above `target` returns converged = false and the best pair found; it never
// claims the criterion is unsatisfiable.
struct SearchOptions {
  int multistarts = 12;
  int simplex_iters = 400;
  int sample_points = 40;
  std::uint64_t seed = 1;
  double target = 1e-5;
};
struct SearchResult {
  VectorXcd U, V;
  bool converged = false;
  ResidualReport report;
};
SearchResult search_uv(const RiemannMatrix& B, const SearchOptions& opts = {},
                       const TruncationSpec& trunc = {});

}  // namespace schottky
