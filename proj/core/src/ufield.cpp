#include "schottky/ufield.hpp"

#include <cmath>

namespace schottky {

namespace {

VectorXcd flow_point(const RiemannMatrix& B, const KPVectors& vecs, double x, double y,
                     double t) {
  const int g = B.g();
  if (vecs.U.size() != g || vecs.V.size() != g || vecs.W.size() != g ||
      vecs.Z.size() != g) {
    throw UsageError("flow vectors must all have the genus dimension");
  }
  return vecs.U * x + vecs.V * y + vecs.W * t + vecs.Z;
}

}  // namespace

cdouble u_field(const RiemannMatrix& B, const KPVectors& vecs, double x, double y,
                double t, int dx, int dy, int dt, const TruncationSpec& trunc) {
  if (dx < 0 || dy < 0 || dt < 0 || dx + dy + dt > 4) {
    throw UsageError("u_field supports derivative orders with dx+dy+dt <= 4");
  }
  const VectorXcd zeta = flow_point(B, vecs, x, y, t);
  const std::vector<VectorXcd> dirs{vecs.U, vecs.V, vecs.W};
  return -2.0 * theta_log_deriv(zeta, B, dirs, {dx + 2, dy, dt}, trunc);
}

KPDefect kp_defect(const RiemannMatrix& B, const KPVectors& vecs, double x, double y,
                   double t, const TruncationSpec& trunc) {
  const VectorXcd zeta = flow_point(B, vecs, x, y, t);
  const std::vector<VectorXcd> dirs{vecs.U, vecs.V, vecs.W};
  const std::vector<std::vector<int>> targets{
      {2, 0, 0},  // u
      {3, 0, 0},  // u_x
      {4, 0, 0},  // u_xx
      {6, 0, 0},  // u_xxxx
      {2, 2, 0},  // u_yy
      {3, 0, 1},  // u_tx
  };
  const std::vector<cdouble> L = theta_log_deriv_batch(zeta, B, dirs, targets, trunc);
  const cdouble u = -2.0 * L[0];
  const cdouble ux = -2.0 * L[1];
  const cdouble uxx = -2.0 * L[2];
  const cdouble uxxxx = -2.0 * L[3];
  const cdouble uyy = -2.0 * L[4];
  const cdouble utx = -2.0 * L[5];

  const cdouble terms[5] = {3.0 * uyy, -4.0 * utx, -6.0 * ux * ux, -6.0 * u * uxx, uxxxx};
  cdouble num{0.0, 0.0};
  double den = 0.0;
  for (const cdouble& term : terms) {
    num += term;
    den += std::abs(term);
  }
  KPDefect out;
  out.scale = den;
  out.defect = (den > 0.0) ? std::abs(num) / den : std::abs(num);
  return out;
}

}  // namespace schottky
