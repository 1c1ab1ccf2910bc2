#pragma once

#include <map>
#include <string>

#include "schottky/rational.hpp"

namespace schottky {

// Truncated pseudo-differential operator sum_j a_j(x) d^j with rational
// coefficients.  floor() is the lowest order whose coefficient is trusted;
// composition propagates the trust window (missing orders of one factor can
// only pollute output orders at least that far down).  exact() marks
// operators, differential operators above all, whose stored terms are the
// whole story, so absent coefficients are genuinely zero rather than unknown.
class PsiDO {
 public:
  static constexpr int kDefaultDepth = 12;

  PsiDO() = default;  // no frame; usable only as assignment target
  static PsiDO zero(FramePtr frame);
  static PsiDO identity(FramePtr frame, int jet_len);
  static PsiDO d(FramePtr frame, int jet_len, int power = 1);
  static PsiDO monomial(RationalFunction coeff, int order);

  void set_coeff(int order, RationalFunction f);  // building exact operators
  void mark_truncated(int floor);                 // declare orders below untrusted

  bool exact() const { return exact_; }
  int floor() const { return floor_; }
  int top() const;
  int min_order() const;
  const FramePtr& frame() const { return frame_; }

  // Stored or structurally-zero coefficient; below floor() on an inexact
  // operator the value is unknowable and this throws TruncationError.
  RationalFunction coeff(int order) const;

  PsiDO compose(const PsiDO& o, int depth = kDefaultDepth) const;
  PsiDO power(int m, int depth = kDefaultDepth) const;
  PsiDO adjoint(int depth = kDefaultDepth) const;
  // Neumann series inverse; requires top order 0 with an x-free invertible
  // leading coefficient (the wave-operator normal form).
  PsiDO inverse(int depth = kDefaultDepth) const;
  PsiDO plus_part() const;         // orders >= 0, a genuine differential operator
  RationalFunction res() const;    // coefficient of d^-1
  PsiDO dy_coeffs() const;         // d/dy applied to every coefficient
  RationalFunction apply(const RationalFunction& f) const;  // differential ops only

  PsiDO operator-() const;
  friend PsiDO operator+(const PsiDO& a, const PsiDO& b);
  friend PsiDO operator-(const PsiDO& a, const PsiDO& b);
  friend PsiDO operator*(cdouble s, const PsiDO& a);
  friend PsiDO operator*(const TaylorJet& s, const PsiDO& a);

  double magnitude() const;  // max coefficient magnitude
  std::string to_text() const;

 private:
  FramePtr frame_;
  std::map<int, RationalFunction> terms_;
  int floor_ = 0;
  bool exact_ = true;

  PsiDO lifted(const FramePtr& to, const std::vector<int>& map) const;
  static void align(PsiDO& a, PsiDO& b);
  void add_term(int order, const RationalFunction& f);
  void enforce_window(int depth);
};

}  // namespace schottky
