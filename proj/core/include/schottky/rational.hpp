#pragma once

#include <memory>
#include <string>
#include <vector>

#include "schottky/jets.hpp"

namespace schottky {

// Shared pole bookkeeping for a family of rational functions: pole i moves
// along the y-jet path poles[i].  Functions built on the same frame combine
// cheaply; combining across frames merges pole lists (see merge_frames).
struct PoleFrame {
  std::vector<TaylorJet> poles;

  int size() const { return static_cast<int>(poles.size()); }
  double scale() const;  // max(1, largest |pole value|), the separation yardstick
};

using FramePtr = std::shared_ptr<const PoleFrame>;

FramePtr make_frame(std::vector<TaylorJet> poles);
FramePtr make_static_frame(const std::vector<cdouble>& positions, int jet_len);

// Pole paths solving the rational many-body flow x_i'' = -8 sum (x_i-x_j)^-3
// with the given initial data, as y-jets of the requested length.  The k-th
// Taylor coefficient of the acceleration depends only on position
// coefficients up to order k, so the series fills in order by order.
FramePtr make_cm_frame(const std::vector<cdouble>& positions,
                       const std::vector<cdouble>& momenta, int jet_len);

// Rational function of x in partial-fraction form: a polynomial part plus,
// for each frame pole p_i, coefficients of (x - p_i)^-k, k >= 1.  Every
// coefficient is a y-jet, so d/dy is exact through both the coefficients and
// the pole motion.  A default-constructed (length-zero) jet in any slot means
// that term is structurally zero.
class RationalFunction {
 public:
  RationalFunction() = default;  // no frame; usable only as assignment target
  explicit RationalFunction(FramePtr frame);
  static RationalFunction constant(FramePtr frame, cdouble c, int jet_len);
  static RationalFunction constant(FramePtr frame, TaylorJet c);

  void add_pole_term(int pole, int order, const TaylorJet& coeff);
  void add_poly_term(int degree, const TaylorJet& coeff);

  const FramePtr& frame() const { return frame_; }
  bool is_zero() const;

  // Term access.  Absent terms come back as length-zero jets.
  TaylorJet pole_coeff(int pole, int order) const;
  TaylorJet poly_coeff(int degree) const;
  int poly_degree() const;      // -1 when the polynomial part is empty
  int pole_order(int pole) const;

  // Laurent coefficient of (x - p_i)^k at pole i: k < 0 reads the stored
  // singular part, k >= 0 Taylor-expands the remaining terms at the pole.
  TaylorJet laurent_at(int pole, int k) const;

  std::vector<TaylorJet> residues() const;  // order-1 coefficient per pole

  double magnitude() const;  // max coefficient jet magnitude
  // Largest k with a coefficient of (x-p)^-k above rel_floor * magnitude;
  // filters the roundoff-sized high-order debris left by cancellations.
  int max_pole_order(double rel_floor = 1e-10) const;

  cdouble eval(cdouble x) const;      // value at the jet center y = 0
  TaylorJet eval_jet(cdouble x) const;  // full y-jet at fixed x

  RationalFunction dx() const;
  RationalFunction dy() const;

  // Unique rational antiderivative with zero constant term.  Simple-pole
  // coefficients above tol * max(1, magnitude) have no rational integral;
  // they are collected and thrown as the obstruction signal.
  RationalFunction antiderivative(double tol = 1e-12, int step_label = -1) const;

  RationalFunction operator-() const;
  RationalFunction& operator+=(const RationalFunction& o);
  RationalFunction& operator-=(const RationalFunction& o);

  friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator*(cdouble s, const RationalFunction& a);
  friend RationalFunction operator*(const RationalFunction& a, cdouble s);
  friend RationalFunction operator*(const TaylorJet& s, const RationalFunction& a);

  std::string to_text() const;  // deterministic full-precision dump

 private:
  FramePtr frame_;
  std::vector<std::vector<TaylorJet>> pole_;  // pole_[i][k-1] multiplies (x-p_i)^-k
  std::vector<TaylorJet> poly_;               // poly_[m] multiplies x^m

  friend struct FrameMerge;
};

// Identifies poles of b with poles of a when the path jets agree within
// 1e-12 * scale, appends the rest, and rejects merged frames with distinct
// poles closer than 1e-9 * scale (partial fractions would be ill-conditioned).
struct FrameMerge {
  FramePtr merged;
  std::vector<int> map_a, map_b;  // old pole index -> merged index

  static FrameMerge make(const FramePtr& a, const FramePtr& b);
  static RationalFunction lift(const RationalFunction& f, const FramePtr& to,
                               const std::vector<int>& map);
};

}  // namespace schottky
