#pragma once

#include "schottky/types.hpp"

namespace schottky {

// Elliptic functions for the lattice spanned by two full periods.  The
// constructor Lagrange-reduces the basis (same lattice, near-orthogonal
// generators), computes the invariants from Eisenstein q-series on the
// reduced ratio, and caches the power sums used by the evaluators.
//
// Evaluation reduces the argument to the centered fundamental cell and sums
// the lattice directly in symmetric pairs, with the even Taylor orders
// through w^6 subtracted termwise and restored from the exact power sums, so
// the truncation error falls off like the tenth power of the cutoff.
class WeierstrassLattice {
 public:
  WeierstrassLattice(cdouble period1, cdouble period2);

  cdouble wp(cdouble w) const;
  cdouble wp_prime(cdouble w) const;
  // 6 wp^2 - g2/2, from the differentiated cubic relation.
  cdouble wp_second(cdouble w) const;

  cdouble g2() const { return g2_; }
  cdouble g3() const { return g3_; }

  // Representative of w in the centered cell of the reduced basis.
  cdouble reduce(cdouble w) const;

  // Reduced generators and their ratio (upper half plane).
  cdouble period1() const { return p1_; }
  cdouble period2() const { return p2_; }
  cdouble tau() const { return p2_ / p1_; }

 private:
  cdouble p1_, p2_;
  cdouble g2_, g3_;
  cdouble s4_, s6_, s8_;  // sums of inverse 4th/6th/8th powers over the lattice
  double inv_det_ = 0.0;  // for the cell reduction
};

}  // namespace schottky
