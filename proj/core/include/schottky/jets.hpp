#pragma once

#include <vector>

#include "schottky/types.hpp"

namespace schottky {

// Truncated Taylor series in the time variable, the scalar type of the
// formal wave algebra.  `length` counts valid coefficients; arithmetic keeps
// the minimum length of its operands, and each time derivative consumes one
// order.  Exhausting the depth throws instead of silently truncating.
class TaylorJet {
 public:
  TaylorJet() = default;  // length zero, only assignable
  TaylorJet(cdouble c0, int len);
  static TaylorJet from_coeffs(std::vector<cdouble> coeffs);

  int length() const { return static_cast<int>(c_.size()); }
  cdouble value() const;
  cdouble coeff(int k) const;
  cdouble eval(double dy) const;
  double magnitude() const;  // max coefficient magnitude

  TaylorJet derivative() const;

  TaylorJet operator-() const;
  TaylorJet& operator+=(const TaylorJet& o);
  TaylorJet& operator-=(const TaylorJet& o);

  friend TaylorJet operator+(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator-(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator*(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator/(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator*(cdouble s, const TaylorJet& a);
  friend TaylorJet operator*(const TaylorJet& a, cdouble s);
  friend TaylorJet operator/(const TaylorJet& a, cdouble s);
  friend TaylorJet operator+(const TaylorJet& a, cdouble s);
  friend TaylorJet operator-(const TaylorJet& a, cdouble s);

  TaylorJet reciprocal() const;
  TaylorJet pow_int(int n) const;  // integer power, negative allowed

 private:
  std::vector<cdouble> c_;
};

}  // namespace schottky
