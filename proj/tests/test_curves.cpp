#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "schottky/curves.hpp"
#include "schottky/theta.hpp"
#include "schottky/ufield.hpp"

using namespace schottky;

namespace {

// Oracle: complete elliptic integral by the arithmetic-geometric mean,
// K(k) = pi / (2 agm(1, sqrt(1 - k^2))).  Shares nothing with the library
// quadrature.  For y^2 = (x-e1)(x-e2)(x-e3) with real sorted roots the loop
// period moduli are |a| = 4 K(k') / sqrt(e3-e1), |b| = 4 K(k) / sqrt(e3-e1)
// with k^2 = (e3-e2)/(e3-e1), and tau = i K(k)/K(k').
double agm(double a, double b) {
  for (int i = 0; i < 80 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return a;
}
double ell_K(double k) { return kPi / (2.0 * agm(1.0, std::sqrt(1.0 - k * k))); }

struct EllipticOracle {
  double mod_a, mod_b;
  cdouble tau;
};
EllipticOracle elliptic_oracle(double e1, double e2, double e3) {
  const double k = std::sqrt((e3 - e2) / (e3 - e1));
  const double kp = std::sqrt((e2 - e1) / (e3 - e1));
  const double K = ell_K(k), Kp = ell_K(kp);
  const double s = std::sqrt(e3 - e1);
  return {4.0 * Kp / s, 4.0 * K / s, cdouble(0.0, K / Kp)};
}

// Independent scale bridge between the calibrated x-direction and the period
// geometry, used by the path-dependence and large-k checks.
cdouble flow_scale(const PeriodData& pd) {
  const XFlowDifferential xf = x_flow_differential(pd);
  const VectorXcd u_true = xf.b_periods / kTwoPiI;
  const VectorXcd u_cal = kp_vectors(pd).U;
  int lead = 0;
  for (int j = 1; j < pd.genus(); ++j) {
    if (std::abs(u_true[j]) > std::abs(u_true[lead])) lead = j;
  }
  return u_cal[lead] / u_true[lead];
}

HyperellipticCurve reference_curve() {
  return HyperellipticCurve{{-2.0, -1.0, 0.0, 1.0, 2.0}};
}

double worst_defect(const RiemannMatrix& B, const KPVectors& vecs,
                    const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::vector<double>& ts) {
  double worst = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      for (double t : ts) {
        worst = std::max(worst, kp_defect(B, vecs, x, y, t).defect);
      }
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("genus-one loop periods match the arithmetic-geometric mean") {
  const std::vector<std::vector<double>> curves = {
      {0.0, 1.0, 2.0}, {0.0, 1.0, 5.0}, {-1.5, 0.25, 2.0}};
  for (const auto& e : curves) {
    const HyperellipticCurve curve{{e[0], e[1], e[2]}};
    const PeriodData pd = hyperelliptic_periods(curve);
    const EllipticOracle ref = elliptic_oracle(e[0], e[1], e[2]);
    CHECK(std::abs(std::abs(pd.a_periods(0, 0)) - ref.mod_a) < 1e-9 * ref.mod_a);
    CHECK(std::abs(std::abs(pd.b_periods(0, 0)) - ref.mod_b) < 1e-9 * ref.mod_b);
    CHECK(std::abs(pd.B.B()(0, 0) - ref.tau) < 1e-9);
  }
}

TEST_CASE("period matrices are symmetric with positive definite imaginary part") {
  std::mt19937_64 rng(20260815ull);
  std::uniform_real_distribution<double> gap(0.3, 1.4);
  std::vector<HyperellipticCurve> curves;
  for (int rep = 0; rep < 4; ++rep) {
    std::vector<cdouble> e(5);
    double pos = -3.0;
    for (int k = 0; k < 5; ++k) {
      e[k] = pos;
      pos += gap(rng);
    }
    curves.push_back({e});
  }
  for (int rep = 0; rep < 2; ++rep) {
    std::vector<cdouble> e(3);
    double pos = -1.0;
    for (int k = 0; k < 3; ++k) {
      e[k] = pos;
      pos += gap(rng);
    }
    curves.push_back({e});
  }
  // one genuinely complex configuration
  curves.push_back({{cdouble(-1.8, 0.0), cdouble(-0.7, 0.35), cdouble(0.1, -0.2),
                     cdouble(1.1, 0.15), cdouble(2.2, 0.0)}});

  for (const auto& curve : curves) {
    const PeriodData pd = hyperelliptic_periods(curve);
    const MatrixXcd B = pd.B.B();
    const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
    CHECK((B - B.transpose()).cwiseAbs().maxCoeff() < 1e-9 * scale);
    CHECK(pd.B.lambda_min() > 0.0);
    CHECK(pd.quad_error < 1e-9);
    // jets carry only even powers of the local coordinate
    for (int m = 1; m < pd.jet_coeffs.cols(); m += 2) {
      CHECK(pd.jet_coeffs.col(m).norm() == 0.0);
    }
    CHECK(std::abs(std::abs(pd.sheet_sign) - 1.0) < 1e-12);
  }
}

TEST_CASE("doubling the quadrature order leaves the period matrix fixed") {
  const PeriodData lo = hyperelliptic_periods(reference_curve(), 200);
  const PeriodData hi = hyperelliptic_periods(reference_curve(), 400);
  CHECK((lo.B.B() - hi.B.B()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((lo.a_periods - hi.a_periods).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("unconverged quadrature reports its error estimate") {
  const HyperellipticCurve tight{{0.0, 0.05, 1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(hyperelliptic_periods(tight, 8), PrecisionError);
  try {
    hyperelliptic_periods(tight, 8);
  } catch (const PrecisionError& err) {
    CHECK(std::string(err.what()).find("raise quad_order") != std::string::npos);
  }
  // the same curve converges once the order is high enough
  CHECK_NOTHROW(hyperelliptic_periods(tight, 600));
}

TEST_CASE("jet and period routes agree on the x-direction") {
  for (const auto& curve :
       {reference_curve(), HyperellipticCurve{{-2.4, -1.1, 0.3, 0.9, 2.6}}}) {
    const PeriodData pd = hyperelliptic_periods(curve);
    const XFlowDifferential xf = x_flow_differential(pd);
    const int g = pd.genus();
    // zero a-periods by construction of the differential
    for (int j = 0; j < g; ++j) {
      cdouble ap{0.0, 0.0};
      for (int m = 0; m <= g; ++m) ap += xf.x_coeffs[m] * pd.a_periods_ext(m, j);
      CHECK(std::abs(ap) < 1e-10);
    }
    // b-periods over 2 pi i reproduce the leading jet column with a sign
    const VectorXcd route_periods = xf.b_periods / kTwoPiI;
    const VectorXcd route_jets = -pd.jet_coeffs.col(0);
    CHECK((route_periods - route_jets).norm() < 1e-8 * route_jets.norm());
  }
}

TEST_CASE("calibrated flow vectors satisfy the flow equation") {
  const PeriodData pd = hyperelliptic_periods(reference_curve());
  KPVectors vecs = kp_vectors(pd);
  CHECK(std::abs(vecs.U.norm() - 1.0) < 1e-12);
  CHECK(vecs.U[0].real() > 0.0);
  CHECK(std::abs(vecs.U[0].imag()) < 1e-12);
  CHECK(vecs.V.norm() < 1e-12);
  CHECK(vecs.W.norm() > 0.1);

  // fresh probe points, disjoint from the calibration grid
  vecs.Z = VectorXcd(2);
  vecs.Z << cdouble(0.11, 0.21), cdouble(0.33, -0.05);
  CHECK(worst_defect(pd.B, vecs, {0.13, 0.29}, {0.17, 0.23}, {0.11, 0.37}) < 1e-6);

  // weighted rescaling (lambda U, lambda^2 V, lambda^3 W) stays a solution
  const cdouble lambda(0.7, 0.4);
  KPVectors scaled = vecs;
  scaled.U *= lambda;
  scaled.V *= lambda * lambda;
  scaled.W *= lambda * lambda * lambda;
  CHECK(worst_defect(pd.B, scaled, {0.13, 0.29}, {0.17, 0.23}, {0.11, 0.37}) < 1e-6);
}

TEST_CASE("genus-one curve route reproduces the elliptic block") {
  for (const auto& curve :
       {HyperellipticCurve{{-1.1, 0.2, 1.7}}, HyperellipticCurve{{0.0, 1.0, 5.0}}}) {
    const PeriodData pd = hyperelliptic_periods(curve);
    const KPVectors from_curve = kp_vectors(pd);
    auto [B1, from_tau] = genus1_data(pd.B.B()(0, 0));
    CHECK(std::abs(from_curve.U[0] - 1.0) < 1e-12);
    CHECK(std::abs(from_curve.V[0]) < 1e-12);
    // W is pinned by (B, U, V), so the two routes must agree exactly
    CHECK(std::abs(from_curve.W[0] - from_tau.W[0]) < 1e-8);
  }
}

TEST_CASE("elliptic block satisfies the flow equation and rejects bad tau") {
  for (cdouble tau : {cdouble(0.3, 1.1), cdouble(0.0, 1.0), cdouble(-0.4, 0.8)}) {
    auto [B, vecs] = genus1_data(tau);
    vecs.Z[0] = cdouble(0.12, 0.34);
    CHECK(worst_defect(B, vecs, {0.1, 0.5}, {0.2, 0.4}, {0.15, 0.3}) < 1e-8);
  }
  CHECK_THROWS_AS(genus1_data(cdouble(0.4, -0.2)), ConventionError);
  CHECK_THROWS_AS(genus1_data(cdouble(0.7, 0.0)), ConventionError);
}

TEST_CASE("one-point data vanishes toward the puncture") {
  const HyperellipticCurve curve{{-1.0, 0.0, 1.5}};
  const PeriodData pd = hyperelliptic_periods(curve);
  const cdouble mu = flow_scale(pd);
  double abel_prev = 0.0, exp_prev = 0.0;
  bool first = true;
  for (double t_P : {0.02, 0.01}) {
    const cdouble x_P = 1.0 / (t_P * t_P);
    const KPVectors f = flex_data(pd, x_P);
    const double abel = f.A.norm();
    const double exp_err = std::abs(f.p * t_P / mu - 1.0);
    CHECK(abel < 0.01);        // Abel image goes to zero linearly
    CHECK(exp_err < 1e-3);     // wave exponent approaches mu / t
    if (!first) {
      CHECK(abel_prev / abel > 1.9);
      CHECK(abel_prev / abel < 2.1);
      CHECK(exp_prev / exp_err > 3.0);  // quadratic remainder
    }
    abel_prev = abel;
    exp_prev = exp_err;
    first = false;
  }
}

TEST_CASE("one-point data is path independent for homotopic paths") {
  const PeriodData pd = hyperelliptic_periods(reference_curve());
  const cdouble x_P(0.5, 1.2);
  const KPVectors direct = flex_data(pd, x_P);
  const KPVectors detour =
      flex_data(pd, x_P, {cdouble(60.0, 10.0), cdouble(5.0, 4.0)});
  CHECK((direct.A - detour.A).norm() < 1e-9);
  CHECK(std::abs(direct.p - detour.p) < 1e-9);
  CHECK(std::abs(direct.E - detour.E) < 1e-12);
}

TEST_CASE("winding paths shift by lattice vectors and matching periods") {
  const PeriodData pd = hyperelliptic_periods(reference_curve());
  const cdouble x_P(0.5, 1.2);
  const KPVectors direct = flex_data(pd, x_P);
  // dip below the branch-point row, then back up: not homotopic to the
  // straight route, so the Abel image must shift by a lattice vector
  const KPVectors wound = flex_data(pd, x_P, {cdouble(0.5, -2.5)});
  const VectorXcd dA = wound.A - direct.A;

  const MatrixXcd B = pd.B.B();
  const Eigen::VectorXd n2_real = pd.B.solve_Y(dA.imag().eval());
  Eigen::Vector2d n2(std::round(n2_real[0]), std::round(n2_real[1]));
  const VectorXcd rem = dA - B * n2.cast<cdouble>();
  Eigen::Vector2d n1(std::round(rem[0].real()), std::round(rem[1].real()));
  const VectorXcd resid = dA - n1.cast<cdouble>() - B * n2.cast<cdouble>();
  CHECK(resid.norm() < 1e-8);
  CHECK(n1.cwiseAbs().sum() + n2.cwiseAbs().sum() > 0.5);  // genuinely wound

  // the wave exponent shifts by the same combination of x-flow b-periods
  const XFlowDifferential xf = x_flow_differential(pd);
  const cdouble mu = flow_scale(pd);
  cdouble dp_expected{0.0, 0.0};
  for (int j = 0; j < 2; ++j) dp_expected += n2[j] * xf.b_periods[j];
  dp_expected *= mu;
  CHECK(std::abs((wound.p - direct.p) - dp_expected) < 1e-8);
  CHECK(std::abs(wound.E - direct.E) < 1e-12);
}

TEST_CASE("wave function solves the spectral problem") {
  const HyperellipticCurve curve{{-1.0, 0.0, 1.5}};
  const PeriodData pd = hyperelliptic_periods(curve);
  KPVectors vecs = flex_data(pd, cdouble(2.4, 0.0));
  vecs.Z[0] = cdouble(0.22, 0.18);

  // normalization at x = 0: theta ratio and exponential both collapse
  {
    const ThetaResult num = theta(vecs.A + vecs.Z, pd.B);
    const ThetaResult den = theta(vecs.Z, pd.B);
    const cdouble psi0 = baker_akhiezer_genus1(pd, vecs, 0.0);
    CHECK(std::abs(psi0 - num.value / den.value) < 1e-12 * std::abs(psi0));
  }

  // psi'' = (E + u) psi pointwise, second derivative by central differences
  const double h = 0.01;
  for (double x : {-0.8, -0.3, 0.1, 0.6, 1.2}) {
    cdouble ps[5];
    for (int i = -2; i <= 2; ++i) ps[i + 2] = baker_akhiezer_genus1(pd, vecs, x + i * h);
    const cdouble d2 =
        (-ps[0] + 16.0 * ps[1] - 30.0 * ps[2] + 16.0 * ps[3] - ps[4]) / (12.0 * h * h);
    const cdouble u = u_field(pd.B, vecs, x, 0.0, 0.0);
    const cdouble res = d2 - (u + vecs.E) * ps[2];
    const double scale =
        std::abs(d2) + std::abs(u * ps[2]) + std::abs(vecs.E * ps[2]);
    CHECK(std::abs(res) / scale < 1e-6);
  }

  // on the theta divisor the denominator vanishes and the wave refuses
  KPVectors on_divisor = vecs;
  const cdouble tau = pd.B.B()(0, 0);
  on_divisor.Z[0] = 0.5 * (1.0 + tau) - 0.8 * on_divisor.U[0];
  CHECK_THROWS_AS(baker_akhiezer_genus1(pd, on_divisor, 0.8), NearDivisorError);
}

TEST_CASE("wave function approaches its large-k expansion") {
  const HyperellipticCurve curve{{-1.0, 0.0, 1.5}};
  const PeriodData pd = hyperelliptic_periods(curve);
  const cdouble mu = flow_scale(pd);
  const double x0 = 0.3;
  const VectorXcd z0 = VectorXcd::Constant(1, cdouble(0.22, 0.18));

  // first-order coefficient from the jet route: mu * c0 d_z log theta
  const VectorXcd lead = pd.jet_coeffs.col(0);
  const KPVectors base = kp_vectors(pd);
  const cdouble pred =
      mu * theta_log_deriv(base.U * x0 + z0, pd.B, {lead}, {1});

  cdouble coeff[3];
  int idx = 0;
  for (double t_P : {0.04, 0.02, 0.01}) {
    const cdouble x_P = 1.0 / (t_P * t_P);
    KPVectors f = flex_data(pd, x_P);
    f.Z = z0;
    const cdouble psi = baker_akhiezer_genus1(pd, f, x0);
    const cdouble rem = psi * std::exp(-f.p * x0) - 1.0;
    CHECK(std::abs(rem) < 3.0 * std::abs(lead[0]) * t_P);  // first order smallness
    coeff[idx++] = rem * f.p;
  }
  // second-order Richardson in t: the coefficient carries both t and t^2
  // remainders, so extrapolate through three geometric step sizes
  const cdouble extrap = (8.0 * coeff[2] - 6.0 * coeff[1] + coeff[0]) / 3.0;
  CHECK(std::abs(extrap - pred) < 1e-4 * (1.0 + std::abs(pred)));
}

TEST_CASE("pinching a handle drives the period matrix to the genus-one limit") {
  const HyperellipticCurve limit{{-2.0, -1.0, 2.0}};
  const cdouble tau_limit = hyperelliptic_periods(limit).B.B()(0, 0);
  const double eps_list[3] = {1e-2, 1e-3, 1e-4};
  const int orders[3] = {400, 1200, 4000};
  double prev_gap = 1e9, prev_b22 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double eps = eps_list[k];
    const HyperellipticCurve pinched{
        {-2.0, -1.0, 0.5 - 0.5 * eps, 0.5 + 0.5 * eps, 2.0}};
    const PeriodData pd = hyperelliptic_periods(pinched, orders[k]);
    const MatrixXcd B = pd.B.B();
    const double gap = std::abs(B(0, 0) - tau_limit);
    CHECK(gap < prev_gap);
    CHECK(B(1, 1).imag() > prev_b22);
    prev_gap = gap;
    prev_b22 = B(1, 1).imag();
  }
  CHECK(prev_gap < 1e-3);
  CHECK(prev_b22 > 2.0);
}

TEST_CASE("curve files parse, render, and reject malformed input") {
  const std::string text =
      "# five branch points, then the quadrature order\n"
      "branch_point = -2 0\n"
      "branch_point = -1 0\n"
      "branch_point = 0 0.25\n"
      "branch_point = 1 0\n"
      "branch_point = 2 0\n"
      "quad_order = 240\n";
  const CurveFile file = parse_curve_file(text);
  CHECK(file.curve.branch_points.size() == 5);
  CHECK(file.curve.branch_points[2] == cdouble(0.0, 0.25));
  CHECK(file.quad_order == 240);

  // round trip through the renderer
  const CurveFile again = parse_curve_file(render_curve_file(file));
  CHECK(again.quad_order == file.quad_order);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(again.curve.branch_points[k] == file.curve.branch_points[k]);
  }

  CHECK_THROWS_AS(parse_curve_file("branch_point = 0 0\n"), UsageError);
  CHECK_THROWS_AS(parse_curve_file("spam = 1\n"), UsageError);
  CHECK_THROWS_AS(parse_curve_file("branch_point = 0\n"), UsageError);
  CHECK_THROWS_AS(
      parse_curve_file("branch_point = 0 0 7\nbranch_point = 1 0\nbranch_point = 2 0\n"),
      UsageError);
  const std::string low_order =
      "branch_point = 0 0\nbranch_point = 1 0\nbranch_point = 2 0\nquad_order = 4\n";
  CHECK_THROWS_AS(parse_curve_file(low_order), UsageError);
}

TEST_CASE("period export is deterministic and complete") {
  const PeriodData pd = hyperelliptic_periods(reference_curve());
  const KPVectors plain = kp_vectors(pd);
  const std::string text = period_data_json(pd, plain);
  CHECK(text == period_data_json(pd, plain));  // byte identical

  const auto doc = nlohmann::json::parse(text);
  CHECK(doc.at("genus").get<int>() == 2);
  CHECK(doc.at("quad_order").get<int>() == 200);
  CHECK(doc.at("branch_points").size() == 5);
  CHECK(doc.at("a_periods").size() == 2);
  CHECK(doc.at("a_periods")[0].size() == 2);
  CHECK(doc.at("b_periods").size() == 2);
  CHECK(doc.at("jet_coeffs")[0].size() == kJetColumns);
  const auto b00 = doc.at("b_matrix")[0][0];
  CHECK(b00[0].get<double>() == pd.B.B()(0, 0).real());
  CHECK(b00[1].get<double>() == pd.B.B()(0, 0).imag());
  const auto u0 = doc.at("kp_vectors").at("U")[0];
  CHECK(u0[0].get<double>() == plain.U[0].real());
  CHECK(doc.find("flex") == doc.end());

  const KPVectors flexed = flex_data(pd, cdouble(0.5, 1.2));
  const auto doc2 = nlohmann::json::parse(period_data_json(pd, flexed));
  CHECK(doc2.at("flex").at("A").size() == 2);
  CHECK(doc2.at("flex").at("p").size() == 2);
}

TEST_CASE("degenerate or malformed curves are rejected") {
  CHECK_THROWS_AS(hyperelliptic_periods(HyperellipticCurve{{0.0, 1.0, 2.0, 3.0}}),
                  UsageError);
  CHECK_THROWS_AS(
      hyperelliptic_periods(HyperellipticCurve{{0.0, 1e-10, 1.0, 2.0, 3.0}}),
      DegeneracyError);
  CHECK_THROWS_AS(hyperelliptic_periods(HyperellipticCurve{{0.0, 1.0, 1.0}}),
                  DegeneracyError);
  CHECK_THROWS_AS(hyperelliptic_periods(reference_curve(), 4), UsageError);
}

TEST_CASE("paths through branch points are refused with guidance") {
  const PeriodData pd = hyperelliptic_periods(reference_curve());
  // straight leg from the far-right anchor to 0.5 runs over e = 1 and e = 2
  CHECK_THROWS_AS(flex_data(pd, cdouble(0.5, 0.0)), PathError);
  // evaluation point on top of a branch point
  CHECK_THROWS_AS(flex_data(pd, cdouble(1.0, 1e-9)), PathError);
}
