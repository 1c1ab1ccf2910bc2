#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "schottky/cm.hpp"
#include "schottky/weierstrass.hpp"

using namespace schottky;

namespace {

// Two-body oracle.  In center-of-mass plus relative coordinates the square
// of the separation obeys (r^2)'' = 8 (H - Xdot^2), a constant, so r^2 is an
// exact quadratic in y and the full motion is closed form.
struct TwoBody {
  cdouble X0, Xdot, r0, rdot0;

  cdouble r2(double y) const {
    const cdouble r2_0 = r0 * r0;
    const cdouble d1 = 2.0 * r0 * rdot0;
    const cdouble d2 = rdot0 * rdot0 - 16.0 / r2_0;  // rddot = -16 / r^3
    return r2_0 + d1 * y + d2 * y * y;
  }
  // Continuous square root branch seeded at r0 (valid while r stays away
  // from zero on the window).
  cdouble r(double y) const {
    cdouble s = std::sqrt(r2(y));
    if (std::abs(s - r0) > std::abs(-s - r0)) s = -s;
    return s;
  }
  cdouble x1(double y) const { return X0 + Xdot * y + 0.5 * r(y); }
  cdouble x2(double y) const { return X0 + Xdot * y - 0.5 * r(y); }
};

// Quadrature oracle for real separations: y as a function of |r| from the
// energy integral y(s) = int ds / (2 sqrt(E + 4/s^2)), Simpson rule.
double time_from_separation(double s0, double s1, double E, int panels = 4000) {
  auto speed = [&](double s) { return 2.0 * std::sqrt(E + 4.0 / (s * s)); };
  const double h = (s1 - s0) / (2 * panels);
  double acc = 1.0 / speed(s0) + 1.0 / speed(s1);
  for (int i = 1; i < 2 * panels; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) / speed(s0 + i * h);
  }
  return acc * h / 3.0;
}

CMState four_body() {
  CMState s;
  s.kind = CMKind::rational;
  s.x = {cdouble{0.0, 0.9}, cdouble{1.1, -0.2}, cdouble{-1.0, 0.1}, cdouble{0.3, -1.2}};
  s.p = {cdouble{0.2, 0.1}, cdouble{-0.3, 0.05}, cdouble{0.1, -0.2}, cdouble{0.0, 0.05}};
  return s;
}

}  // namespace

TEST_CASE("rhs of the smallest configuration is pinned") {
  CMState s;
  s.x = {cdouble{0.0, 0.0}, cdouble{1.0, 0.0}};
  s.p = {cdouble{0.0, 0.0}, cdouble{0.0, 0.0}};
  const auto a = cm_rhs(s);
  CHECK(std::abs(a[0] - cdouble{8.0, 0.0}) < 1e-14);
  CHECK(std::abs(a[1] + cdouble{8.0, 0.0}) < 1e-14);
}

TEST_CASE("two body motion matches the closed form") {
  CMState s;
  s.x = {cdouble{-1.0, 0.0}, cdouble{1.0, 0.0}};
  s.p = {cdouble{-1.25, 0.0}, cdouble{1.25, 0.0}};
  TwoBody oracle{0.0, 0.0, s.x[0] - s.x[1], s.p[0] - s.p[1]};

  Trajectory traj = cm_integrate(s, 0.4);
  for (double y : {0.05, 0.17, 0.31, 0.4}) {
    const CMState st = traj.at(y);
    CHECK(std::abs(st.x[0] - oracle.x1(y)) < 1e-10);
    CHECK(std::abs(st.x[1] - oracle.x2(y)) < 1e-10);
  }
}

TEST_CASE("two body separation matches the energy quadrature") {
  // Separating pair: r = -2 shrinking to -3, so |r| runs from 2 to 3 and the
  // radial energy E = rdot^2/4 - 4/r^2 stays positive.
  CMState s;
  s.x = {cdouble{-1.0, 0.0}, cdouble{1.0, 0.0}};
  s.p = {cdouble{-1.25, 0.0}, cdouble{1.25, 0.0}};
  const double E = std::norm(s.p[0] - s.p[1]) / 4.0 - 4.0 / std::norm(s.x[0] - s.x[1]);
  REQUIRE(E > 0.0);
  const double y_target = time_from_separation(2.0, 3.0, E);
  Trajectory traj = cm_integrate(s, y_target + 0.05);
  const CMState st = traj.at(y_target);
  CHECK(std::abs(std::abs(st.x[0] - st.x[1]) - 3.0) < 1e-8);
}

TEST_CASE("energy is conserved across kernels") {
  CMState s = four_body();
  const cdouble h0 = cm_hamiltonian(s);
  Trajectory traj = cm_integrate(s, 1.5);
  const cdouble h1 = cm_hamiltonian(traj.at(1.5));
  CHECK(std::abs(h1 - h0) < 1e-10 * std::max(1.0, std::abs(h0)));

  CMState trig = four_body();
  trig.kind = CMKind::trigonometric;
  const cdouble th0 = cm_hamiltonian(trig);
  const cdouble th1 = cm_hamiltonian(cm_integrate(trig, 0.8).at(0.8));
  CHECK(std::abs(th1 - th0) < 1e-10 * std::max(1.0, std::abs(th0)));

  CMState ell = four_body();
  ell.kind = CMKind::elliptic;
  ell.period1 = cdouble{4.0, 0.0};
  ell.period2 = cdouble{0.5, 4.5};
  const cdouble eh0 = cm_hamiltonian(ell);
  const cdouble eh1 = cm_hamiltonian(cm_integrate(ell, 0.5).at(0.5));
  CHECK(std::abs(eh1 - eh0) < 1e-9 * std::max(1.0, std::abs(eh0)));
}

TEST_CASE("dense output interpolation keeps integrator accuracy") {
  CMState s = four_body();
  Trajectory traj = cm_integrate(s, 1.0);
  for (double y : {0.237, 0.611, 0.923}) {
    const CMState direct = cm_integrate(s, y).at(y);
    const CMState interp = traj.at(y);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(direct.x[i] - interp.x[i]) < 1e-9);
      CHECK(std::abs(direct.p[i] - interp.p[i]) < 1e-8);
    }
  }
  CHECK_THROWS_AS(traj.at(1.2), UsageError);
}

TEST_CASE("acceleration equals twice the linear Laurent coefficient of u") {
  // u(x) = 2 sum_j K(x - x_j); w_i is the linear coefficient at x_i.
  auto check_kernel = [](const CMState& s, const std::function<cdouble(cdouble)>& u) {
    const auto acc = cm_rhs(s);
    const auto coeffs = laurent_coeffs(u, s.x[0], -2, 1, 0.3, 128);
    CHECK(std::abs(coeffs[0] - 2.0) < 1e-9);          // double pole weight
    CHECK(std::abs(coeffs[1]) < 1e-9);                // no simple pole
    const cdouble w = coeffs[3];
    CHECK(std::abs(acc[0] - 2.0 * w) < 1e-8 * std::max(1.0, std::abs(w)));
  };

  CMState s = four_body();
  check_kernel(s, [&](cdouble x) {
    cdouble u{0.0, 0.0};
    for (const cdouble& xj : s.x) u += 2.0 / ((x - xj) * (x - xj));
    return u;
  });

  CMState trig = four_body();
  trig.kind = CMKind::trigonometric;
  check_kernel(trig, [&](cdouble x) {
    cdouble u{0.0, 0.0};
    for (const cdouble& xj : trig.x) {
      const cdouble sn = std::sin(x - xj);
      u += 2.0 / (sn * sn);
    }
    return u;
  });

  CMState ell = four_body();
  ell.kind = CMKind::elliptic;
  ell.period1 = cdouble{4.0, 0.0};
  ell.period2 = cdouble{0.5, 4.5};
  WeierstrassLattice lat(ell.period1, ell.period2);
  check_kernel(ell, [&](cdouble x) {
    cdouble u{0.0, 0.0};
    for (const cdouble& xj : ell.x) u += 2.0 * lat.wp(x - xj);
    return u;
  });
}

TEST_CASE("product tau zeros track the particle paths") {
  CMState s = four_body();
  Trajectory traj = cm_integrate(s, 0.6);
  TauFn tau = product_tau(traj);

  TrackOptions opts;
  opts.samples = 13;
  const auto paths = track_zeros(tau, s.x, 0.0, 0.6, opts);
  REQUIRE(paths.size() == 4);
  for (size_t zi = 0; zi < paths.size(); ++zi) {
    for (size_t k = 0; k < paths[zi].y.size(); ++k) {
      const CMState ref = traj.at(paths[zi].y[k]);
      CHECK(std::abs(paths[zi].x[k] - ref.x[zi]) < 1e-9);
      CHECK(std::abs(paths[zi].xdot[k] - ref.p[zi]) < 1e-8);
    }
  }
}

TEST_CASE("residues vanish along a consistent flow") {
  CMState s = four_body();
  Trajectory traj = cm_integrate(s, 0.5);
  TauFn tau = product_tau(traj);
  for (double y : {0.0, 0.21, 0.5}) {
    const CMState st = traj.at(y);
    const auto res = residue_condition(tau, y, st.x);
    for (const cdouble& r : res) CHECK(std::abs(r) < 1e-8);
  }
}

TEST_CASE("stale jets are caught by the residue condition") {
  CMState s = four_body();
  Trajectory traj = cm_integrate(s, 0.5);
  const double y_freeze = 0.1;
  const double delta = 1e-2;

  // Corrupt one pole path linearly after y_freeze but keep reporting the
  // accelerations of the unperturbed flow: a flow-inconsistent tau.
  PolePaths stale = [traj, y_freeze, delta](double y, std::vector<cdouble>& x,
                                            std::vector<cdouble>& v,
                                            std::vector<cdouble>& a) {
    const CMState st = traj.at(y);
    x = st.x;
    v = st.p;
    a = cm_rhs(st);
    x[0] += delta * (y - y_freeze);
    v[0] += delta;
  };
  TauFn tau = product_tau(stale);
  const double y_eval = y_freeze + 0.25;
  std::vector<cdouble> seeds;
  {
    const CMState st = traj.at(y_eval);
    seeds = st.x;
    seeds[0] += delta * (y_eval - y_freeze);
  }
  const auto res = residue_condition(tau, y_eval, seeds);
  double worst = 0.0;
  for (const cdouble& r : res) worst = std::max(worst, std::abs(r));
  CHECK(worst > 1e-4);
}

TEST_CASE("three poles at cube roots of unity rest in equilibrium") {
  const double a = 0.7;
  const cdouble w = std::exp(cdouble{0.0, 2.0 * kPi / 3.0});
  CMState s;
  s.x = {a * 1.0, a * w, a * w * w};
  s.p = {cdouble{0, 0}, cdouble{0, 0}, cdouble{0, 0}};
  for (const cdouble& f : cm_rhs(s)) CHECK(std::abs(f) < 1e-12);

  // An evenly spaced collinear triple is not an equilibrium: the outer
  // particles feel a net force.
  CMState line;
  line.x = {cdouble{-a, 0}, cdouble{0, 0}, cdouble{a, 0}};
  line.p = s.p;
  const auto f = cm_rhs(line);
  CHECK(std::abs(f[0]) > 1.0);
  CHECK(std::abs(f[1]) < 1e-13);

  Trajectory traj = cm_integrate(s, 0.8);
  const CMState end = traj.at(0.8);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(end.x[i] - s.x[i]) < 1e-10);

  TauFn tau = product_tau(traj);
  for (const cdouble& r : residue_condition(tau, 0.4, s.x)) {
    CHECK(std::abs(r) < 1e-9);
  }
}

TEST_CASE("collisions abort with the offending pair") {
  CMState s;
  s.x = {cdouble{-1.0, 0.0}, cdouble{1.0, 0.0}};
  s.p = {cdouble{2.0, 0.0}, cdouble{-2.0, 0.0}};  // head on
  try {
    cm_integrate(s, 2.0);
    FAIL("expected a collision");
  } catch (const CollisionError& e) {
    REQUIRE(e.pairs.size() >= 1);
    CHECK(e.pairs[0] == std::pair<int, int>{0, 1});
    CHECK(e.y > 0.0);
  }
}

TEST_CASE("csv export is deterministic and shaped correctly") {
  CMState s = four_body();
  Trajectory traj = cm_integrate(s, 0.3);
  const std::string a = traj.to_csv(7);
  const std::string b = traj.to_csv(7);
  CHECK(a == b);
  CHECK(a.substr(0, 2) == "y,");
  int rows = 0;
  for (char c : a) rows += (c == '\n');
  CHECK(rows == 8);  // header plus seven samples
}
