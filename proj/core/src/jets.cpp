#include "schottky/jets.hpp"

#include <algorithm>
#include <cmath>

namespace schottky {

namespace {

void require_usable(const TaylorJet& j, const char* what) {
  if (j.length() == 0) {
    throw PrecisionError(std::string("jet depth exhausted in ") + what);
  }
}

}  // namespace

TaylorJet::TaylorJet(cdouble c0, int len) {
  if (len < 1) throw UsageError("jet length must be positive");
  c_.assign(len, cdouble{0.0, 0.0});
  c_[0] = c0;
}

TaylorJet TaylorJet::from_coeffs(std::vector<cdouble> coeffs) {
  if (coeffs.empty()) throw UsageError("jet needs at least one coefficient");
  TaylorJet j;
  j.c_ = std::move(coeffs);
  return j;
}

cdouble TaylorJet::value() const {
  require_usable(*this, "value");
  return c_[0];
}

cdouble TaylorJet::coeff(int k) const {
  if (k < 0 || k >= length()) throw UsageError("jet coefficient index out of range");
  return c_[k];
}

cdouble TaylorJet::eval(double dy) const {
  require_usable(*this, "eval");
  cdouble acc{0.0, 0.0};
  for (int k = length() - 1; k >= 0; --k) acc = acc * dy + c_[k];
  return acc;
}

double TaylorJet::magnitude() const {
  double m = 0.0;
  for (const cdouble& v : c_) m = std::max(m, std::abs(v));
  return m;
}

TaylorJet TaylorJet::derivative() const {
  if (length() <= 1) {
    throw PrecisionError("jet depth exhausted by a time derivative");
  }
  TaylorJet out;
  out.c_.resize(c_.size() - 1);
  for (size_t k = 1; k < c_.size(); ++k) {
    out.c_[k - 1] = static_cast<double>(k) * c_[k];
  }
  return out;
}

TaylorJet TaylorJet::operator-() const {
  TaylorJet out = *this;
  for (cdouble& v : out.c_) v = -v;
  return out;
}

TaylorJet& TaylorJet::operator+=(const TaylorJet& o) {
  *this = *this + o;
  return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& o) {
  *this = *this - o;
  return *this;
}

TaylorJet operator+(const TaylorJet& a, const TaylorJet& b) {
  require_usable(a, "addition");
  require_usable(b, "addition");
  const int len = std::min(a.length(), b.length());
  TaylorJet out;
  out.c_.resize(len);
  for (int k = 0; k < len; ++k) out.c_[k] = a.c_[k] + b.c_[k];
  return out;
}

TaylorJet operator-(const TaylorJet& a, const TaylorJet& b) {
  require_usable(a, "subtraction");
  require_usable(b, "subtraction");
  const int len = std::min(a.length(), b.length());
  TaylorJet out;
  out.c_.resize(len);
  for (int k = 0; k < len; ++k) out.c_[k] = a.c_[k] - b.c_[k];
  return out;
}

TaylorJet operator*(const TaylorJet& a, const TaylorJet& b) {
  require_usable(a, "multiplication");
  require_usable(b, "multiplication");
  const int len = std::min(a.length(), b.length());
  TaylorJet out;
  out.c_.assign(len, cdouble{0.0, 0.0});
  for (int i = 0; i < len; ++i) {
    for (int j = 0; i + j < len; ++j) out.c_[i + j] += a.c_[i] * b.c_[j];
  }
  return out;
}

TaylorJet TaylorJet::reciprocal() const {
  require_usable(*this, "reciprocal");
  if (std::abs(c_[0]) == 0.0) {
    throw PrecisionError("reciprocal of a jet with vanishing value");
  }
  TaylorJet out;
  out.c_.assign(c_.size(), cdouble{0.0, 0.0});
  out.c_[0] = 1.0 / c_[0];
  for (size_t k = 1; k < c_.size(); ++k) {
    cdouble acc{0.0, 0.0};
    for (size_t j = 1; j <= k; ++j) acc += c_[j] * out.c_[k - j];
    out.c_[k] = -acc / c_[0];
  }
  return out;
}

TaylorJet operator/(const TaylorJet& a, const TaylorJet& b) { return a * b.reciprocal(); }

TaylorJet operator*(cdouble s, const TaylorJet& a) {
  require_usable(a, "scaling");
  TaylorJet out = a;
  for (cdouble& v : out.c_) v *= s;
  return out;
}

TaylorJet operator*(const TaylorJet& a, cdouble s) { return s * a; }

TaylorJet operator/(const TaylorJet& a, cdouble s) { return (1.0 / s) * a; }

TaylorJet operator+(const TaylorJet& a, cdouble s) {
  require_usable(a, "shift");
  TaylorJet out = a;
  out.c_[0] += s;
  return out;
}

TaylorJet operator-(const TaylorJet& a, cdouble s) { return a + (-s); }

TaylorJet TaylorJet::pow_int(int n) const {
  require_usable(*this, "power");
  if (n < 0) return reciprocal().pow_int(-n);
  TaylorJet acc(cdouble{1.0, 0.0}, length());
  TaylorJet base = *this;
  while (n > 0) {
    if (n & 1) acc = acc * base;
    base = base * base;
    n >>= 1;
  }
  return acc;
}

}  // namespace schottky
