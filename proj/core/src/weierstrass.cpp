#include "schottky/weierstrass.hpp"

#include <cmath>

namespace schottky {

namespace {

// Lambert-type Eisenstein series sum_{n>=1} n^k q^n / (1 - q^n).  The basis
// reduction guarantees |q| <= exp(-pi sqrt(3)), so a short loop suffices.
cdouble lambert_sum(cdouble q, int k) {
  cdouble acc{0.0, 0.0};
  cdouble qn{1.0, 0.0};
  for (int n = 1; n <= 400; ++n) {
    qn *= q;
    const cdouble term = std::pow(static_cast<double>(n), k) * qn / (1.0 - qn);
    acc += term;
    if (std::abs(term) < 1e-19 * (1.0 + std::abs(acc))) break;
  }
  return acc;
}

}  // namespace

WeierstrassLattice::WeierstrassLattice(cdouble period1, cdouble period2)
    : p1_(period1), p2_(period2) {
  if (std::abs(p1_) == 0.0 || std::abs(p2_) == 0.0) {
    throw ConventionError("lattice generators must be nonzero");
  }
  // Gauss/Lagrange reduction: repeatedly subtract the nearest multiple of the
  // shorter generator from the longer one.  Terminates with |Re tau| <= 1/2
  // and |tau| >= 1, hence Im tau >= sqrt(3)/2.
  const double scale = std::max(std::abs(period1), std::abs(period2));
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(p2_) < std::abs(p1_)) std::swap(p1_, p2_);
    if (std::abs(p1_) < 1e-14 * scale) {
      throw ConventionError("lattice generators are collinear");
    }
    const double m = std::round((p2_ * std::conj(p1_)).real() / std::norm(p1_));
    if (m == 0.0) break;
    p2_ -= m * p1_;
  }
  const double det = p1_.real() * p2_.imag() - p2_.real() * p1_.imag();
  if (std::abs(det) < 1e-14 * scale * scale) {
    throw ConventionError("lattice generators are collinear");
  }
  if (det < 0.0) p2_ = -p2_;  // same lattice, ratio in the upper half plane
  inv_det_ = 1.0 / (p1_.real() * p2_.imag() - p2_.real() * p1_.imag());

  const cdouble tau = p2_ / p1_;
  const cdouble q = std::exp(kTwoPiI * tau);
  const double pi4 = kPi * kPi * kPi * kPi;
  const double pi6 = pi4 * kPi * kPi;
  const cdouble e4 = 1.0 + 240.0 * lambert_sum(q, 3);
  const cdouble e6 = 1.0 - 504.0 * lambert_sum(q, 5);
  const cdouble p1_2 = p1_ * p1_;
  const cdouble p1_4 = p1_2 * p1_2;
  s4_ = (pi4 / 45.0) * e4 / p1_4;
  s6_ = (2.0 * pi6 / 945.0) * e6 / (p1_4 * p1_2);
  s8_ = (3.0 / 7.0) * s4_ * s4_;
  g2_ = 60.0 * s4_;
  g3_ = 140.0 * s6_;
}

cdouble WeierstrassLattice::reduce(cdouble w) const {
  const double a = (w.real() * p2_.imag() - p2_.real() * w.imag()) * inv_det_;
  const double b = (p1_.real() * w.imag() - w.real() * p1_.imag()) * inv_det_;
  return w - std::round(a) * p1_ - std::round(b) * p2_;
}

cdouble WeierstrassLattice::wp(cdouble w) const {
  w = reduce(w);
  const double w_abs = std::abs(w);
  if (w_abs < 1e-13 * std::abs(p1_)) {
    throw UsageError("wp evaluated at a lattice point");
  }
  const int N = std::max(48, static_cast<int>(std::ceil(48.0 * w_abs / std::abs(p1_))));
  const cdouble w2 = w * w, w4 = w2 * w2, w6 = w4 * w2;
  auto f = [&](cdouble lam) {
    const cdouble l2 = lam * lam, l4 = l2 * l2;
    const cdouble d = w - lam;
    return 1.0 / (d * d) - 1.0 / l2 - 3.0 * w2 / l4 - 5.0 * w4 / (l4 * l2) -
           7.0 * w6 / (l4 * l4);
  };
  cdouble acc{0.0, 0.0};
  for (int m = 0; m <= N; ++m) {
    const int n_lo = (m == 0) ? 1 : -N;
    for (int n = n_lo; n <= N; ++n) {
      const cdouble lam = static_cast<double>(m) * p1_ + static_cast<double>(n) * p2_;
      acc += f(lam) + f(-lam);
    }
  }
  return 1.0 / w2 + acc + 3.0 * w2 * s4_ + 5.0 * w4 * s6_ + 7.0 * w6 * s8_;
}

cdouble WeierstrassLattice::wp_prime(cdouble w) const {
  w = reduce(w);
  const double w_abs = std::abs(w);
  if (w_abs < 1e-13 * std::abs(p1_)) {
    throw UsageError("wp_prime evaluated at a lattice point");
  }
  const int N = std::max(48, static_cast<int>(std::ceil(48.0 * w_abs / std::abs(p1_))));
  const cdouble w2 = w * w, w3 = w2 * w, w5 = w3 * w2;
  auto fp = [&](cdouble lam) {
    const cdouble l2 = lam * lam, l4 = l2 * l2;
    const cdouble d = w - lam;
    return -2.0 / (d * d * d) - 6.0 * w / l4 - 20.0 * w3 / (l4 * l2) -
           42.0 * w5 / (l4 * l4);
  };
  cdouble acc{0.0, 0.0};
  for (int m = 0; m <= N; ++m) {
    const int n_lo = (m == 0) ? 1 : -N;
    for (int n = n_lo; n <= N; ++n) {
      const cdouble lam = static_cast<double>(m) * p1_ + static_cast<double>(n) * p2_;
      acc += fp(lam) + fp(-lam);
    }
  }
  return -2.0 / w3 + acc + 6.0 * w * s4_ + 20.0 * w3 * s6_ + 42.0 * w5 * s8_;
}

cdouble WeierstrassLattice::wp_second(cdouble w) const {
  const cdouble p = wp(w);
  return 6.0 * p * p - g2_ / 2.0;
}

}  // namespace schottky
