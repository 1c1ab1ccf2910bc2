#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "schottky/weierstrass.hpp"

using namespace schottky;

namespace {

// Reference route: raw symmetric box sums plus Richardson extrapolation in
// the cutoff.  Slow and simple, shares no code with the library evaluators.
cdouble lattice_power_sum(cdouble p1, cdouble p2, int k, int L) {
  cdouble acc{0.0, 0.0};
  for (int m = -L; m <= L; ++m) {
    for (int n = -L; n <= L; ++n) {
      if (m == 0 && n == 0) continue;
      const cdouble lam = static_cast<double>(m) * p1 + static_cast<double>(n) * p2;
      acc += std::pow(lam, -k);
    }
  }
  return acc;
}

cdouble richardson(cdouble coarse, cdouble fine, int order) {
  return fine + (fine - coarse) / (std::pow(2.0, order) - 1.0);
}

cdouble wp_reference(cdouble w, cdouble p1, cdouble p2, int L) {
  cdouble acc = 1.0 / (w * w);
  for (int m = -L; m <= L; ++m) {
    for (int n = -L; n <= L; ++n) {
      if (m == 0 && n == 0) continue;
      const cdouble lam = static_cast<double>(m) * p1 + static_cast<double>(n) * p2;
      const cdouble d = w - lam;
      acc += 1.0 / (d * d) - 1.0 / (lam * lam);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("invariants match Richardson extrapolated lattice sums") {
  const cdouble p1{2.0, 0.3};
  const cdouble p2{0.4, 1.8};
  WeierstrassLattice lat(p1, p2);

  const cdouble s4 = richardson(lattice_power_sum(p1, p2, 4, 150),
                                lattice_power_sum(p1, p2, 4, 300), 2);
  const cdouble s6 = richardson(lattice_power_sum(p1, p2, 6, 150),
                                lattice_power_sum(p1, p2, 6, 300), 4);
  CHECK(std::abs(lat.g2() - 60.0 * s4) < 1e-7 * std::abs(lat.g2()));
  CHECK(std::abs(lat.g3() - 140.0 * s6) < 1e-7 * std::abs(lat.g3()));
}

TEST_CASE("wp matches the extrapolated direct sum") {
  const cdouble p1{2.0, 0.0};
  const cdouble p2{0.5, 2.2};
  WeierstrassLattice lat(p1, p2);
  for (const cdouble w : {cdouble{0.31, 0.22}, cdouble{-0.74, 0.55}, cdouble{0.9, -0.4}}) {
    const cdouble ref =
        richardson(wp_reference(w, p1, p2, 60), wp_reference(w, p1, p2, 120), 2);
    const cdouble got = lat.wp(w);
    CHECK(std::abs(got - ref) < 2e-6 * std::max(1.0, std::abs(got)));
  }
}

TEST_CASE("the cubic differential relation holds to near roundoff") {
  WeierstrassLattice lat({2.0, 0.1}, {-0.3, 1.7});
  for (const cdouble w : {cdouble{0.27, 0.31}, cdouble{0.61, -0.44}, cdouble{-0.52, 0.18},
                          cdouble{1.4, 0.9}}) {
    const cdouble p = lat.wp(w);
    const cdouble dp = lat.wp_prime(w);
    const cdouble lhs = dp * dp;
    const cdouble rhs = 4.0 * p * p * p - lat.g2() * p - lat.g3();
    const double scale = std::abs(lhs) + std::abs(4.0 * p * p * p) + std::abs(lat.g2() * p) +
                         std::abs(lat.g3());
    CHECK(std::abs(lhs - rhs) < 1e-10 * scale);
  }
}

TEST_CASE("periodicity in both original generators") {
  const cdouble p1{1.7, 0.2};
  const cdouble p2{5.1, 2.6};  // deliberately far from reduced
  WeierstrassLattice lat(p1, p2);
  const cdouble w{0.43, 0.29};
  const cdouble base = lat.wp(w);
  CHECK(std::abs(lat.wp(w + p1) - base) < 1e-10 * std::abs(base));
  CHECK(std::abs(lat.wp(w + p2) - base) < 1e-10 * std::abs(base));
  CHECK(std::abs(lat.wp(w - 3.0 * p1 + 2.0 * p2) - base) < 1e-10 * std::abs(base));
  const cdouble dbase = lat.wp_prime(w);
  CHECK(std::abs(lat.wp_prime(w + p2) - dbase) < 1e-10 * std::abs(dbase));
}

TEST_CASE("parity of wp and wp_prime") {
  WeierstrassLattice lat({2.0, 0.0}, {0.3, 1.9});
  for (const cdouble w : {cdouble{0.4, 0.3}, cdouble{-0.2, 0.6}}) {
    CHECK(std::abs(lat.wp(-w) - lat.wp(w)) < 1e-11 * std::abs(lat.wp(w)));
    CHECK(std::abs(lat.wp_prime(-w) + lat.wp_prime(w)) < 1e-11 * std::abs(lat.wp_prime(w)));
  }
}

TEST_CASE("wp_second agrees with a finite difference of wp_prime") {
  WeierstrassLattice lat({2.0, 0.0}, {0.0, 2.4});
  const cdouble w{0.52, 0.37};
  const double h = 1e-5;
  const cdouble fd = (lat.wp_prime(w + h) - lat.wp_prime(w - h)) / (2.0 * h);
  const cdouble got = lat.wp_second(w);
  CHECK(std::abs(got - fd) < 1e-6 * std::max(1.0, std::abs(got)));
}

TEST_CASE("Laurent behavior at the origin") {
  WeierstrassLattice lat({2.0, 0.0}, {0.1, 2.0});
  const cdouble w{1e-3, 5e-4};
  // w^2 wp(w) = 1 + O(w^4)
  CHECK(std::abs(w * w * lat.wp(w) - 1.0) < 1e-11);
  // w^3 wp'(w) = -2 + O(w^4)
  CHECK(std::abs(w * w * w * lat.wp_prime(w) + 2.0) < 1e-11);
}

TEST_CASE("special lattices kill one invariant") {
  WeierstrassLattice square({2.0, 0.0}, {0.0, 2.0});
  CHECK(std::abs(square.g3()) < 1e-14 * std::abs(square.g2()));
  CHECK(std::abs(square.g2().imag()) < 1e-14 * std::abs(square.g2()));

  const cdouble rot = std::exp(cdouble{0.0, 2.0 * kPi / 6.0});
  WeierstrassLattice hex({2.0, 0.0}, 2.0 * rot);
  CHECK(std::abs(hex.g2()) < 1e-13 * std::abs(hex.g3()));
}

TEST_CASE("degenerate input is rejected and poles are flagged") {
  CHECK_THROWS_AS(WeierstrassLattice({2.0, 1.0}, {4.0, 2.0}), ConventionError);
  CHECK_THROWS_AS(WeierstrassLattice({0.0, 0.0}, {1.0, 1.0}), ConventionError);
  WeierstrassLattice lat({2.0, 0.0}, {0.0, 2.0});
  CHECK_THROWS_AS(lat.wp({0.0, 0.0}), UsageError);
  CHECK_THROWS_AS(lat.wp(cdouble{2.0, 2.0}), UsageError);  // a lattice point
  CHECK_THROWS_AS(lat.wp_prime(cdouble{-4.0, 0.0}), UsageError);
}
