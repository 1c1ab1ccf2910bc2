#pragma once

#include <vector>

#include "schottky/types.hpp"

namespace schottky {

// Result of one certified lattice sum.  `scale` is the largest term magnitude
// encountered (including the recentering prefactor), so value/scale measures
// cancellation: near the theta divisor value/scale -> 0 while scale stays
// O(1).  `tail` is the proven bound on everything outside the summation ball.
struct ThetaResult {
  cdouble value{0.0, 0.0};
  double scale = 0.0;
  double tail = 0.0;
  int radius = 0;
};

// theta(z | B) = sum over n in Z^g of exp(pi i (B n, n) + 2 pi i (z, n)).
ThetaResult theta(const VectorXcd& z, const RiemannMatrix& B,
                  const TruncationSpec& trunc = {});

// Directional derivative along each vector in `dirs` (repeat a vector for
// higher order in one direction).  Order = dirs.size(), capped at 8.
ThetaResult theta_deriv(const VectorXcd& z, const RiemannMatrix& B,
                        const std::vector<VectorXcd>& dirs,
                        const TruncationSpec& trunc = {});

// theta with half-integer characteristic [eps, delta]:
//   sum over n of exp(pi i (B(n+eps), n+eps) + 2 pi i (z+delta, n+eps)),
// with the same directional-derivative convention as theta_deriv.
ThetaResult theta_char(const VectorXcd& z, const RiemannMatrix& B,
                       const Characteristic& chi,
                       const std::vector<VectorXcd>& dirs = {},
                       const TruncationSpec& trunc = {});

// Second-order theta constant section: Theta[eps](z) = theta[eps, 0](2z | 2B)
// for eps with entries in {0, 1/2}.  Derivative directions are with respect
// to z, so each order contributes a factor 2 relative to theta_char at 2z.
ThetaResult level2_theta(const VectorXd& eps, const VectorXcd& z,
                         const RiemannMatrix& B,
                         const std::vector<VectorXcd>& dirs = {},
                         const TruncationSpec& trunc = {});

// Many derivative multisets in a single lattice sweep.  `multisets[k]` lists
// indices into `dirs`; the k-th result is the derivative along that multiset
// (an empty multiset yields plain theta).  All results share one truncation
// radius certified for the worst requested weight.
std::vector<ThetaResult> theta_multi(const VectorXcd& z, const RiemannMatrix& B,
                                     const std::vector<VectorXcd>& dirs,
                                     const std::vector<std::vector<int>>& multisets,
                                     const TruncationSpec& trunc = {},
                                     const VectorXd* eps = nullptr);

// Partitions of {0, .., n-1}, cached per n.  Each partition is a list of
// blocks, each block a sorted list of element indices.  Exposed because the
// logarithmic-derivative assembly and its tests both need the same list.
const std::vector<std::vector<std::vector<int>>>& set_partitions(int n);

// Derivative of log theta along a multiset of directions (counts[i] copies of
// dirs[i]), assembled from plain theta derivatives by partition inversion.
// Throws NearDivisorError when |theta|/scale falls under trunc.divisor_floor.
cdouble theta_log_deriv(const VectorXcd& z, const RiemannMatrix& B,
                        const std::vector<VectorXcd>& dirs,
                        const std::vector<int>& counts,
                        const TruncationSpec& trunc = {});

// Batched form: many count vectors over the same directions, one lattice
// sweep over the union of the required sub-multisets.
std::vector<cdouble> theta_log_deriv_batch(const VectorXcd& z, const RiemannMatrix& B,
                                           const std::vector<VectorXcd>& dirs,
                                           const std::vector<std::vector<int>>& targets,
                                           const TruncationSpec& trunc = {});

}  // namespace schottky
