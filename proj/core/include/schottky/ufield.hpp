#pragma once

#include "schottky/theta.hpp"
#include "schottky/types.hpp"

namespace schottky {

// Quasi-periodic field attached to (B, U, V, W, Z):
//   u(x, y, t) = -2 d^2/dx^2 log theta(U x + V y + W t + Z | B),
// with derivatives taken along the flow directions, so requesting
// (dx, dy, dt) returns d^dx_x d^dy_y d^dt_t u.  Total order dx+dy+dt <= 4.
cdouble u_field(const RiemannMatrix& B, const KPVectors& vecs, double x, double y,
                double t, int dx = 0, int dy = 0, int dt = 0,
                const TruncationSpec& trunc = {});

// Pointwise defect of the flow equation 3 u_yy = (4 u_t + 6 u u_x - u_xxx)_x.
// `defect` is |3u_yy - 4u_tx - 6u_x^2 - 6u u_xx + u_xxxx| divided by `scale`,
// the sum of the magnitudes of those five terms.  All six required log
// derivatives come from a single lattice sweep.
struct KPDefect {
  double defect = 0.0;
  double scale = 0.0;
};
KPDefect kp_defect(const RiemannMatrix& B, const KPVectors& vecs, double x, double y,
                   double t, const TruncationSpec& trunc = {});

}  // namespace schottky
