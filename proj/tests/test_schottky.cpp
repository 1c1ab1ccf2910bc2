#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "schottky/curves.hpp"
#include "schottky/schottky.hpp"
#include "schottky/theta.hpp"

using namespace schottky;

namespace {

// The reference curve and its periods are shared by most cases; the
// quadrature is deterministic, so one copy is enough.
const std::vector<cdouble> kReferenceRoots{-2.0, -1.0, 0.0, 1.0, 2.0};

const PeriodData& reference_periods() {
  static const PeriodData pd =
      hyperelliptic_periods(HyperellipticCurve(kReferenceRoots));
  return pd;
}

// 2-jet of the Abel map at the point over x0 on the sheet y = sqrt(f(x0)),
// differentiating the integrand of the normalized differentials in the
// plane coordinate: U = N (1, x0)^T / y, V = dU/dx.  This is the family the
// divisor criterion is supposed to carve out, built here from the curve
// alone as an oracle for the detector.
void abel_jet(const PeriodData& pd, cdouble x0, VectorXcd& U, VectorXcd& V) {
  cdouble f{1.0, 0.0};
  cdouble fp{0.0, 0.0};
  for (cdouble e : kReferenceRoots) {
    fp = fp * (x0 - e) + f;
    f = f * (x0 - e);
  }
  const cdouble y0 = std::sqrt(f);
  const MatrixXcd& N = pd.normalization;
  const VectorXcd tangent = N.col(0) + x0 * N.col(1);
  U = tangent / y0;
  V = N.col(1) / y0 - tangent * fp / (2.0 * y0 * y0 * y0);
}

GridSpec probe_grid() {
  GridSpec grid;
  grid.xs = {0.11, 0.37};
  grid.ys = {0.07, 0.29};
  grid.ts = {0.13, 0.31};
  return grid;
}

VectorXcd junk_vector2() {
  VectorXcd v(2);
  v << cdouble(0.9, 0.1), cdouble(-0.3, 0.6);
  return v;
}

}  // namespace

TEST_CASE("kp flow residual vanishes on curve data and flags arbitrary vectors") {
  const GridSpec grid = probe_grid();

  auto [B1, vecs1] = genus1_data(cdouble(0.3, 1.1));
  const ResidualReport r1 = kp_residual(B1, vecs1, grid);
  CHECK(r1.criterion == "kp_flow");
  CHECK(r1.samples == 8);
  CHECK(r1.skipped == 0);
  CHECK(r1.max_residual < 1e-8);
  CHECK(r1.normalization > 0.0);
  CHECK(r1.pass());

  const PeriodData& pd = reference_periods();
  KPVectors vecs = kp_vectors(pd);
  vecs.Z = VectorXcd(2);
  vecs.Z << cdouble(0.21, 0.13), cdouble(-0.12, 0.24);
  const ResidualReport r2 = kp_residual(pd.B, vecs, grid);
  CHECK(r2.max_residual < 1e-8);
  CHECK(r2.pass());

  // same inputs, byte-identical report
  CHECK(kp_residual(pd.B, vecs, grid).to_text() == r2.to_text());

  // an arbitrary direction in place of the calibrated one fails loudly
  KPVectors bad = vecs;
  bad.U = junk_vector2().normalized();
  const ResidualReport rb = kp_residual(pd.B, bad, grid);
  CHECK(rb.max_residual > 1e-2);
  CHECK_FALSE(rb.pass());
}

TEST_CASE("kp grid sanitation skips and refuses near-divisor probes") {
  auto [B, vecs] = genus1_data(cdouble(0.3, 1.1));
  // base point on the theta divisor itself
  vecs.Z = VectorXcd(1);
  vecs.Z[0] = 0.5 * (1.0 + cdouble(0.3, 1.1));

  GridSpec dead;
  dead.xs = {0.0, 1e-12};
  dead.ys = {0.0};
  dead.ts = {0.0};
  CHECK_THROWS_AS(kp_residual(B, vecs, dead), SamplingError);

  GridSpec mixed;
  mixed.xs = {0.0, 0.45};
  mixed.ys = {0.0};
  mixed.ts = {0.0};
  const ResidualReport r = kp_residual(B, vecs, mixed);
  CHECK(r.skipped == 1);
  CHECK(r.samples == 1);
  CHECK(r.max_residual < 1e-8);

  CHECK_THROWS_AS(kp_residual(B, vecs, GridSpec{}), UsageError);
}

TEST_CASE("bilinear constant system closes on flow vectors") {
  auto [B1, vecs1] = genus1_data(cdouble(0.3, 1.1));
  const DubrovinResult d1 = dubrovin_residual(B1, vecs1);
  CHECK(d1.report.criterion == "dubrovin_constants");
  CHECK(d1.report.samples == 2);
  CHECK(d1.report.max_residual < 1e-8);
  // frozen from an independent least-squares fit of the same rows
  CHECK(std::abs(d1.c - cdouble(11.695414, -35.310061)) < 1e-4);
  CHECK(d1.report.details.count("c") == 1);

  const PeriodData& pd = reference_periods();
  const KPVectors vecs = kp_vectors(pd);
  const DubrovinResult d2 = dubrovin_residual(pd.B, vecs);
  CHECK(d2.report.samples == 4);
  CHECK(d2.report.max_residual < 1e-8);
  CHECK(std::abs(d2.c - cdouble(-13.213195, 0.0)) < 1e-4);

  // the flow admits an exact boost (U, V + aU, W + 3/2 aV + 3/4 a^2 U); the
  // constant system must hold with the same fitted value along the orbit
  const cdouble a(0.7, 0.3);
  KPVectors boosted = vecs;
  boosted.V = vecs.V + a * vecs.U;
  boosted.W = vecs.W + 1.5 * a * vecs.V + 0.75 * a * a * vecs.U;
  const DubrovinResult d3 = dubrovin_residual(pd.B, boosted);
  CHECK(d3.report.max_residual < 1e-8);
  CHECK(std::abs(d3.c - d2.c) < 1e-6);

  KPVectors bad = vecs;
  bad.V = junk_vector2();
  CHECK(dubrovin_residual(pd.B, bad).report.max_residual > 1e-2);

  // genus cap guards the characteristic enumeration
  MatrixXcd M7 = MatrixXcd::Identity(7, 7) * cdouble(0.0, 1.0);
  KPVectors v7;
  v7.U = VectorXcd::Ones(7);
  v7.V = VectorXcd::Zero(7);
  v7.W = VectorXcd::Ones(7);
  v7.Z = VectorXcd::Zero(7);
  CHECK_THROWS_AS(dubrovin_residual(RiemannMatrix(M7), v7), UsageError);
}

TEST_CASE("divisor sampling certifies zeros of theta") {
  auto [B1, vecs1] = genus1_data(cdouble(0.3, 1.1));
  const DivisorSample s1 = sample_divisor(B1, vecs1.U, 6, 7);
  CHECK(s1.points.size() == 6);
  CHECK(s1.lines_failed == 0);
  const cdouble tau(0.3, 1.1);
  const cdouble kappa = 0.5 * (1.0 + tau);
  for (std::size_t i = 0; i < s1.points.size(); ++i) {
    CHECK(s1.theta_ratio[i] <= 1e-12);
    CHECK(s1.slope[i] > 1e-3);
    // at genus 1 the divisor is the single point (1 + tau) / 2 mod lattice
    const cdouble d = s1.points[i][0] - kappa;
    const double n = std::round(d.imag() / tau.imag());
    const double m = std::round(d.real() - n * tau.real());
    CHECK(std::abs(d - m - n * tau) < 1e-9);
  }
  // spot check the stored ratio against a fresh evaluation
  const ThetaResult t0 = theta(s1.points[0], B1);
  CHECK(std::abs(t0.value) <= 1e-12 * t0.scale);

  const PeriodData& pd = reference_periods();
  const VectorXcd U = kp_vectors(pd).U;
  const DivisorSample s2 = sample_divisor(pd.B, U, 20, 11);
  CHECK(s2.points.size() == 20);
  CHECK(s2.lines_failed == 0);
  for (double ratio : s2.theta_ratio) CHECK(ratio <= 1e-12);

  // same seed, same points
  const DivisorSample s3 = sample_divisor(pd.B, U, 20, 11);
  REQUIRE(s3.points.size() == s2.points.size());
  for (std::size_t i = 0; i < s2.points.size(); ++i) {
    CHECK((s2.points[i] - s3.points[i]).norm() == 0.0);
  }

  CHECK_THROWS_AS(sample_divisor(pd.B, U, 0, 1), UsageError);
  CHECK_THROWS_AS(sample_divisor(pd.B, VectorXcd::Ones(3), 4, 1), UsageError);
}

TEST_CASE("divisor equation separates abel jets from arbitrary pairs") {
  const PeriodData& pd = reference_periods();
  const KPVectors vecs = kp_vectors(pd);
  const DivisorSample sample = sample_divisor(pd.B, vecs.U, 40, 21);

  const ResidualReport good = divisor_eq_residual(pd.B, vecs.U, vecs.V, sample);
  CHECK(good.criterion == "divisor_equation");
  CHECK(good.samples >= 30);
  CHECK(good.max_residual < 1e-8);
  CHECK(good.seed == sample.seed);
  CHECK(good.details.count("excluded_singular") == 1);

  // the full 2-jet of the Abel map at a finite plane point is in the family
  VectorXcd Uj, Vj;
  abel_jet(pd, cdouble(1.83, -0.41), Uj, Vj);
  const DivisorSample sj = sample_divisor(pd.B, Uj, 30, 22);
  CHECK(divisor_eq_residual(pd.B, Uj, Vj, sj).max_residual < 1e-8);

  // halving the second jet coefficient leaves the family
  CHECK(divisor_eq_residual(pd.B, Uj, 0.5 * Vj, sj).max_residual > 1e-2);

  // arbitrary V against the true direction, and an arbitrary direction
  const ResidualReport badv =
      divisor_eq_residual(pd.B, vecs.U, junk_vector2(), sample);
  CHECK(badv.max_residual > 1e-2);
  CHECK(badv.max_residual > 1e3 * good.max_residual);
  const VectorXcd Ur = junk_vector2().normalized();
  const DivisorSample sr = sample_divisor(pd.B, Ur, 30, 23);
  CHECK(divisor_eq_residual(pd.B, Ur, VectorXcd::Zero(2), sr).max_residual > 1e-2);

  // the residual is a gauge invariant: reparametrizations scale U and V and
  // shift V along U, and the report must not move
  const cdouble lambda(0.3, 0.9);
  const cdouble beta(0.2, -0.5);
  const ResidualReport gauged = divisor_eq_residual(
      pd.B, lambda * vecs.U, lambda * lambda * vecs.V + beta * vecs.U, sample);
  CHECK(gauged.max_residual == doctest::Approx(good.max_residual).epsilon(1e-9));
  CHECK(gauged.mean_residual == doctest::Approx(good.mean_residual).epsilon(1e-9));

  // V -> -V is a symmetry of the criterion (not a gauge move)
  const ResidualReport mirrored =
      divisor_eq_residual(pd.B, vecs.U, -vecs.V, sample);
  CHECK(mirrored.max_residual == doctest::Approx(good.max_residual).epsilon(1e-9));

  CHECK_THROWS_AS(divisor_eq_residual(pd.B, vecs.U, vecs.V, DivisorSample{}),
                  UsageError);
}

TEST_CASE("gauge fixing is canonical on the reparametrization orbit") {
  const VectorXcd U = junk_vector2();
  VectorXcd V(2);
  V << cdouble(0.4, -0.7), cdouble(-0.9, 0.2);
  auto [u0, v0] = gauge_fix_uv(U, V);
  CHECK(std::abs(u0.norm() - 1.0) < 1e-12);
  CHECK(std::abs(u0[0].imag()) < 1e-12);
  CHECK(u0[0].real() > 0.0);
  CHECK(std::abs(u0.dot(v0)) < 1e-12);

  for (cdouble lambda : {cdouble(0.0, 1.0), cdouble(-2.3, 0.4)}) {
    for (cdouble beta : {cdouble(0.0, 0.0), cdouble(1.4, -2.2)}) {
      auto [u1, v1] = gauge_fix_uv(lambda * U, lambda * lambda * V + beta * U);
      CHECK((u1 - u0).norm() < 1e-12);
      CHECK((v1 - v0).norm() < 1e-10 * (1.0 + v0.norm()));
    }
  }

  CHECK_THROWS_AS(gauge_fix_uv(VectorXcd::Zero(2), V), UsageError);
  CHECK_THROWS_AS(gauge_fix_uv(U, VectorXcd::Zero(3)), UsageError);
}

TEST_CASE("flex system closes at spectral points") {
  const HyperellipticCurve curve({-1.0, 0.0, 1.5});
  const PeriodData pd = hyperelliptic_periods(curve);
  for (cdouble xp : {cdouble(2.4, 0.9), cdouble(-3.7, 1.3)}) {
    const KPVectors fx = flex_data(pd, xp);
    REQUIRE(fx.has_flex);
    const ResidualReport r = flex_residual(pd.B, fx.U, fx.V, fx.A, fx.p, fx.E);
    CHECK(r.criterion == "flex_system");
    CHECK(r.samples == 2);
    CHECK(r.max_residual < 1e-10);
  }

  const PeriodData& ref = reference_periods();
  const KPVectors fx2 = flex_data(ref, cdouble(3.1, 1.2));
  const ResidualReport r2 = flex_residual(ref.B, fx2.U, fx2.V, fx2.A, fx2.p, fx2.E);
  CHECK(r2.samples == 4);
  CHECK(r2.max_residual < 1e-10);

  // junk spectral data fails, and so does a slightly wrong multiplier
  VectorXcd Ar(2);
  Ar << cdouble(0.31, 0.17), cdouble(-0.23, 0.41);
  CHECK(flex_residual(ref.B, fx2.U, fx2.V, Ar, cdouble(0.4, -0.2), cdouble(1.1, 0.3))
            .max_residual > 1e-2);
  CHECK(flex_residual(ref.B, fx2.U, fx2.V, fx2.A, fx2.p + 0.01, fx2.E)
            .max_residual > 1e-6);

  // a lattice point for A makes the wave trivial; the report says so
  VectorXcd Alat = VectorXcd::Zero(2);
  Alat[0] = cdouble(1.0, 0.0) + ref.B.B()(0, 0);
  Alat[1] = ref.B.B()(1, 0);
  const ResidualReport rl =
      flex_residual(ref.B, fx2.U, fx2.V, Alat, fx2.p, fx2.E);
  CHECK(rl.details.count("degenerate_flex") == 1);

  CHECK_THROWS_AS(
      flex_residual(ref.B, fx2.U, fx2.V, VectorXcd::Ones(3), fx2.p, fx2.E),
      UsageError);
}

TEST_CASE("direction search returns certified tangent jets") {
  auto [B1, vecs1] = genus1_data(cdouble(0.3, 1.1));
  SearchOptions small;
  small.multistarts = 4;
  small.simplex_iters = 200;
  small.sample_points = 12;
  small.seed = 5;
  const SearchResult r1 = search_uv(B1, small);
  CHECK(r1.converged);
  CHECK(r1.report.criterion == "uv_search");
  CHECK(r1.report.max_residual < 1e-7);
  // canonical output: unit direction, real positive lead, V orthogonal to U,
  // which at genus 1 pins V = 0
  CHECK(std::abs(r1.U.norm() - 1.0) < 1e-9);
  CHECK(std::abs(r1.U[0].imag()) < 1e-12);
  CHECK(r1.V.norm() < 1e-12);

  const PeriodData& pd = reference_periods();
  SearchOptions opts;
  opts.seed = 3;
  const SearchResult r2 = search_uv(pd.B, opts);
  CHECK(r2.converged);
  CHECK(r2.report.max_residual < 1e-5);
  CHECK(r2.report.details.at("multistarts") == "12");

  // validate against the curve: the found pair must be the Abel 2-jet at
  // some plane point, recovered by mapping the direction back through the
  // normalization matrix (the sheet choice flips the sign of V)
  const VectorXcd w = pd.normalization.inverse() * r2.U;
  REQUIRE(std::abs(w[0]) > 1e-6 * std::abs(w[1]));
  VectorXcd Uj, Vj;
  abel_jet(pd, w[1] / w[0], Uj, Vj);
  auto [uc, vc] = gauge_fix_uv(Uj, Vj);
  auto [us, vs] = gauge_fix_uv(r2.U, r2.V);
  CHECK((uc - us).norm() < 1e-8);
  CHECK(std::min((vc - vs).norm(), (vc + vs).norm()) < 1e-3);

  // same options, byte-identical report
  const SearchResult r3 = search_uv(pd.B, opts);
  CHECK(r3.report.to_text() == r2.report.to_text());

  // a perturbed product of elliptic curves is not a jacobian; with a small
  // budget the search must come back unconverged rather than pretend
  MatrixXcd M = MatrixXcd::Zero(4, 4);
  M(0, 0) = cdouble(0.1, 1.0);
  M(1, 1) = cdouble(-0.2, 1.3);
  M(2, 2) = cdouble(0.3, 0.9);
  M(3, 3) = cdouble(0.0, 1.6);
  const double off[6] = {0.021, -0.013, 0.017, 0.009, -0.024, 0.011};
  int k = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      M(i, j) = M(j, i) = cdouble(off[k], 0.008 * (k + 1));
      ++k;
    }
  }
  SearchOptions tight;
  tight.multistarts = 2;
  tight.simplex_iters = 40;
  tight.sample_points = 16;
  tight.seed = 9;
  const SearchResult r4 = search_uv(RiemannMatrix(M), tight);
  CHECK_FALSE(r4.converged);
  CHECK(r4.report.max_residual > 1e-3);

  MatrixXcd M5 = MatrixXcd::Identity(5, 5) * cdouble(0.0, 1.0);
  CHECK_THROWS_AS(search_uv(RiemannMatrix(M5)), UsageError);
  SearchOptions zero;
  zero.multistarts = 0;
  CHECK_THROWS_AS(search_uv(pd.B, zero), UsageError);
}
