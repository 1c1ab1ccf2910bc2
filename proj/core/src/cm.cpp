#include "schottky/cm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "schottky/weierstrass.hpp"

namespace schottky {

namespace {

void check_state(const CMState& s) {
  if (s.x.empty() || s.x.size() != s.p.size()) {
    throw UsageError("state needs matching nonempty position and velocity lists");
  }
}

// Shared kernel evaluation.  The elliptic lattice is built once per caller
// and reused across right-hand-side evaluations.
struct Kernel {
  CMKind kind;
  std::optional<WeierstrassLattice> lattice;

  explicit Kernel(const CMState& s) : kind(s.kind) {
    if (kind == CMKind::elliptic) lattice.emplace(s.period1, s.period2);
  }

  // Appends near-collision pairs for the given positions.
  void close_pairs(const std::vector<cdouble>& x, double min_sep,
                   std::vector<std::pair<int, int>>& out) const {
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const cdouble d = x[i] - x[j];
        double sep = 0.0;
        switch (kind) {
          case CMKind::rational: sep = std::abs(d); break;
          case CMKind::trigonometric: sep = std::abs(std::sin(d)); break;
          case CMKind::elliptic: sep = std::abs(lattice->reduce(d)); break;
        }
        if (sep < min_sep) out.emplace_back(i, j);
      }
    }
  }

  void accel(const std::vector<cdouble>& x, double y, double min_sep,
             std::vector<cdouble>& a) const {
    std::vector<std::pair<int, int>> close;
    close_pairs(x, min_sep, close);
    if (!close.empty()) {
      throw CollisionError("particles closer than the separation floor at y = " +
                           format_double(y), y, std::move(close));
    }
    const int n = static_cast<int>(x.size());
    a.assign(n, cdouble{0.0, 0.0});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const cdouble d = x[i] - x[j];
        switch (kind) {
          case CMKind::rational:
            a[i] += -8.0 / (d * d * d);
            break;
          case CMKind::trigonometric: {
            const cdouble s = std::sin(d);
            a[i] += -8.0 * std::cos(d) / (s * s * s);
            break;
          }
          case CMKind::elliptic:
            a[i] += 4.0 * lattice->wp_prime(d);
            break;
        }
      }
    }
  }
};

}  // namespace

std::vector<cdouble> cm_rhs(const CMState& state) {
  check_state(state);
  Kernel kernel(state);
  std::vector<cdouble> a;
  kernel.accel(state.x, state.y, 0.0, a);
  return a;
}

cdouble cm_hamiltonian(const CMState& state) {
  check_state(state);
  Kernel kernel(state);
  cdouble h{0.0, 0.0};
  for (const cdouble& p : state.p) h += 0.5 * p * p;
  const int n = static_cast<int>(state.x.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const cdouble d = state.x[i] - state.x[j];
      switch (state.kind) {
        case CMKind::rational:
          h -= 4.0 / (d * d);
          break;
        case CMKind::trigonometric: {
          const cdouble s = std::sin(d);
          h -= 4.0 / (s * s);
          break;
        }
        case CMKind::elliptic:
          h -= 4.0 * kernel.lattice->wp(d);
          break;
      }
    }
  }
  return h;
}

Trajectory cm_integrate(const CMState& state, double y_end, const CMOptions& opts) {
  check_state(state);
  Kernel kernel(state);
  const int n = static_cast<int>(state.x.size());
  const double span = y_end - state.y;
  const double dir = (span >= 0.0) ? 1.0 : -1.0;

  Trajectory traj;
  traj.kind_ = state.kind;
  traj.period1_ = state.period1;
  traj.period2_ = state.period2;

  std::vector<cdouble> x = state.x, p = state.p, a;
  kernel.accel(x, state.y, opts.min_sep, a);
  traj.nodes_.push_back({state.y, x, p, a});
  if (span == 0.0) return traj;

  // Dormand-Prince 5(4) on the doubled system (x, p).
  static const double A[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  };
  static const double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static const double E[7] = {71.0 / 57600, 0, -71.0 / 16695, 71.0 / 1920,
                              -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

  const int dim = 2 * n;
  auto rhs = [&](double y, const std::vector<cdouble>& s, std::vector<cdouble>& out) {
    const std::vector<cdouble> pos(s.begin(), s.begin() + n);
    std::vector<cdouble> acc;
    kernel.accel(pos, y, opts.min_sep, acc);
    out.resize(dim);
    for (int i = 0; i < n; ++i) {
      out[i] = s[n + i];
      out[n + i] = acc[i];
    }
  };

  std::vector<cdouble> s(dim);
  for (int i = 0; i < n; ++i) {
    s[i] = x[i];
    s[n + i] = p[i];
  }
  double y = state.y;
  double h = dir * std::min({opts.h_max, std::abs(span), 1e-2 * std::abs(span) + 1e-4});

  std::vector<std::vector<cdouble>> k(7, std::vector<cdouble>(dim));
  std::vector<cdouble> stage(dim), snew(dim);
  rhs(y, s, k[0]);

  for (long step = 0; step < opts.max_steps; ++step) {
    bool final_step = false;
    if (dir * (y + h - y_end) >= 0.0) {
      h = y_end - y;
      final_step = true;
    }
    if (std::abs(h) < 1e-15 * (1.0 + std::abs(y))) {
      std::vector<std::pair<int, int>> close;
      const std::vector<cdouble> pos(s.begin(), s.begin() + n);
      kernel.close_pairs(pos, 10.0 * opts.min_sep, close);
      if (!close.empty()) {
        throw CollisionError("step size collapsed near a particle collision at y = " +
                             format_double(y), y, std::move(close));
      }
      throw PrecisionError("step size collapsed at y = " + format_double(y));
    }

    for (int i = 1; i < 7; ++i) {
      for (int d = 0; d < dim; ++d) {
        cdouble acc{0.0, 0.0};
        for (int j = 0; j < i; ++j) acc += A[i][j] * k[j][d];
        stage[d] = s[d] + h * acc;
      }
      rhs(y + C[i] * h, stage, k[i]);
    }
    // Row 7 of the tableau is the fifth-order solution; stage now holds it.
    snew = stage;

    double err = 0.0;
    for (int d = 0; d < dim; ++d) {
      cdouble e{0.0, 0.0};
      for (int j = 0; j < 7; ++j) e += E[j] * k[j][d];
      const double sc = opts.tol + opts.tol * std::max(std::abs(s[d]), std::abs(snew[d]));
      const double r = std::abs(h) * std::abs(e) / sc;
      err += r * r;
    }
    err = std::sqrt(err / dim);

    if (err <= 1.0) {
      y = final_step ? y_end : y + h;
      s = snew;
      k[0] = k[6];  // first-same-as-last
      std::vector<cdouble> pos(s.begin(), s.begin() + n), vel(s.begin() + n, s.end());
      std::vector<cdouble> acc(k[0].begin() + n, k[0].end());
      traj.nodes_.push_back({y, std::move(pos), std::move(vel), std::move(acc)});
      if (final_step) break;
    }
    const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h *= std::clamp(grow, 0.2, 5.0);
    if (std::abs(h) > opts.h_max) h = dir * opts.h_max;
  }
  if (traj.nodes_.back().y != y_end) {
    throw PrecisionError("integration exhausted the step budget before y = " +
                         format_double(y_end));
  }
  if (dir < 0.0) std::reverse(traj.nodes_.begin(), traj.nodes_.end());
  return traj;
}

CMState Trajectory::at(double y) const {
  const double lo = nodes_.front().y, hi = nodes_.back().y;
  if (y < lo - 1e-12 || y > hi + 1e-12) {
    throw UsageError("evaluation outside the integrated window");
  }
  y = std::clamp(y, lo, hi);
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), y,
                             [](const Node& nd, double v) { return nd.y < v; });
  if (it == nodes_.begin()) ++it;
  if (it == nodes_.end()) --it;
  const Node& n1 = *it;
  const Node& n0 = *(it - 1);

  CMState out;
  out.kind = kind_;
  out.period1 = period1_;
  out.period2 = period2_;
  out.y = y;
  const double h = n1.y - n0.y;
  const double t = (h > 0.0) ? (y - n0.y) / h : 0.0;
  const int n = particles();
  out.x.resize(n);
  out.p.resize(n);

  // Quintic Hermite from (x, p, a) at both ends; velocity is the exact
  // derivative of the position piece.
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h01 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h02 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h10 = 10 * t3 - 15 * t4 + 6 * t5;
  const double h11 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h12 = 0.5 * t3 - t4 + 0.5 * t5;
  const double d00 = (-30 * t2 + 60 * t3 - 30 * t4);
  const double d01 = (1 - 18 * t2 + 32 * t3 - 15 * t4);
  const double d02 = (t - 4.5 * t2 + 6 * t3 - 2.5 * t4);
  const double d10 = (30 * t2 - 60 * t3 + 30 * t4);
  const double d11 = (-12 * t2 + 28 * t3 - 15 * t4);
  const double d12 = (1.5 * t2 - 4 * t3 + 2.5 * t4);
  for (int i = 0; i < n; ++i) {
    const cdouble x0 = n0.x[i], v0 = n0.p[i], a0 = n0.a[i];
    const cdouble x1 = n1.x[i], v1 = n1.p[i], a1 = n1.a[i];
    out.x[i] = h00 * x0 + h01 * (h * v0) + h02 * (h * h * a0) + h10 * x1 +
               h11 * (h * v1) + h12 * (h * h * a1);
    out.p[i] = (d00 * x0 + d01 * (h * v0) + d02 * (h * h * a0) + d10 * x1 +
                d11 * (h * v1) + d12 * (h * h * a1)) /
               h;
  }
  return out;
}

std::string Trajectory::to_csv(int samples) const {
  if (samples < 2) throw UsageError("csv export needs at least two samples");
  std::ostringstream os;
  const int n = particles();
  os << "y";
  for (int i = 0; i < n; ++i) {
    os << ",re_x" << i << ",im_x" << i;
  }
  for (int i = 0; i < n; ++i) {
    os << ",re_p" << i << ",im_p" << i;
  }
  os << "\n";
  for (int srow = 0; srow < samples; ++srow) {
    const double y = y_begin() + (y_end() - y_begin()) * srow / (samples - 1);
    const CMState st = at(y);
    os << format_double(y);
    for (int i = 0; i < n; ++i) {
      os << "," << format_double(st.x[i].real()) << "," << format_double(st.x[i].imag());
    }
    for (int i = 0; i < n; ++i) {
      os << "," << format_double(st.p[i].real()) << "," << format_double(st.p[i].imag());
    }
    os << "\n";
  }
  return os.str();
}

TauFn theta_tau(const RiemannMatrix& B, const KPVectors& vecs, const TruncationSpec& trunc) {
  if (vecs.U.size() != B.g() || vecs.V.size() != B.g() || vecs.Z.size() != B.g()) {
    throw UsageError("flow vectors must have the genus dimension");
  }
  const RiemannMatrix Bc = B;
  const VectorXcd U = vecs.U, V = vecs.V, Z = vecs.Z;
  return [Bc, U, V, Z, trunc](cdouble x, double y) -> TauJet {
    const VectorXcd zeta = U * x + V * y + Z;
    // One sweep for value and the five derivatives.
    static const std::vector<std::vector<int>> kSets{{}, {0}, {1}, {0, 0}, {0, 1}, {1, 1}};
    const auto r = theta_multi(zeta, Bc, {U, V}, kSets, trunc);
    return TauJet{r[0].value, r[1].value, r[2].value, r[3].value, r[4].value, r[5].value};
  };
}

TauFn product_tau(const PolePaths& paths) {
  return [paths](cdouble x, double y) -> TauJet {
    std::vector<cdouble> xs, vs, as;
    paths(y, xs, vs, as);
    if (xs.empty() || xs.size() != vs.size() || xs.size() != as.size()) {
      throw UsageError("pole paths must report matching position, velocity and "
                       "acceleration lists");
    }
    const int n = static_cast<int>(xs.size());
    std::vector<cdouble> d(n);
    for (int i = 0; i < n; ++i) d[i] = x - xs[i];
    // Division-free elementary products so evaluation directly on a pole
    // path (the Newton seed case) stays finite.
    auto prod_without = [&](int skip1, int skip2) {
      cdouble p{1.0, 0.0};
      for (int k = 0; k < n; ++k) {
        if (k != skip1 && k != skip2) p *= d[k];
      }
      return p;
    };
    TauJet jet{};
    jet.f = prod_without(-1, -1);
    for (int i = 0; i < n; ++i) {
      const cdouble pi = prod_without(i, -1);
      jet.fx += pi;
      jet.fy += -vs[i] * pi;
      jet.fyy += -as[i] * pi;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const cdouble pij = prod_without(i, j);
        jet.fxx += pij;
        jet.fxy += -vs[i] * pij;
        jet.fyy += vs[i] * vs[j] * pij;
      }
    }
    return jet;
  };
}

TauFn product_tau(const Trajectory& traj) {
  PolePaths paths = [traj](double y, std::vector<cdouble>& x, std::vector<cdouble>& v,
                           std::vector<cdouble>& a) {
    const CMState st = traj.at(y);
    x = st.x;
    v = st.p;
    a = cm_rhs(st);
  };
  return product_tau(paths);
}

namespace {

// Newton polish of a zero of tau(., y).  Returns the converged location and
// writes the implicit velocity -fy/fx if requested.
cdouble polish_zero(const TauFn& tau, double y, cdouble x0, const TrackOptions& opts,
                    cdouble* xdot) {
  cdouble x = x0;
  for (int it = 0; it < opts.newton_cap; ++it) {
    const TauJet j = tau(x, y);
    if (std::abs(j.fx) < 1e-14 * (1.0 + std::abs(j.f))) {
      throw PathError("zero tracking hit a critical point of tau at y = " +
                      format_double(y));
    }
    const cdouble step = j.f / j.fx;
    x -= step;
    if (std::abs(step) <= opts.newton_tol * (1.0 + std::abs(x))) {
      if (xdot) {
        const TauJet jf = tau(x, y);
        *xdot = -jf.fy / jf.fx;
      }
      return x;
    }
  }
  throw PathError("zero tracking failed to converge at y = " + format_double(y));
}

}  // namespace

std::vector<ZeroPath> track_zeros(const TauFn& tau, const std::vector<cdouble>& seeds,
                                  double y0, double y1, const TrackOptions& opts) {
  if (opts.samples < 2) throw UsageError("tracking needs at least two samples");
  std::vector<ZeroPath> paths(seeds.size());
  for (size_t zi = 0; zi < seeds.size(); ++zi) {
    ZeroPath& path = paths[zi];
    cdouble x = seeds[zi];
    cdouble xdot{0.0, 0.0};
    double y_prev = y0;
    for (int srow = 0; srow < opts.samples; ++srow) {
      const double y = y0 + (y1 - y0) * srow / (opts.samples - 1);
      const cdouble prediction = x + xdot * (y - y_prev);
      x = polish_zero(tau, y, prediction, opts, &xdot);
      path.y.push_back(y);
      path.x.push_back(x);
      path.xdot.push_back(xdot);
      y_prev = y;
    }
  }
  return paths;
}

std::vector<cdouble> laurent_coeffs(const std::function<cdouble(cdouble)>& f,
                                    cdouble center, int k_lo, int k_hi, double radius,
                                    int nodes) {
  if (k_hi < k_lo) throw UsageError("empty Laurent coefficient range");
  if (radius <= 0.0) throw UsageError("contour radius must be positive");
  if (nodes < 8) throw UsageError("contour needs at least eight nodes");
  std::vector<cdouble> samples(nodes);
  for (int m = 0; m < nodes; ++m) {
    const double phi = 2.0 * kPi * m / nodes;
    samples[m] = f(center + radius * std::exp(cdouble{0.0, phi}));
  }
  std::vector<cdouble> out;
  out.reserve(k_hi - k_lo + 1);
  for (int k = k_lo; k <= k_hi; ++k) {
    cdouble acc{0.0, 0.0};
    for (int m = 0; m < nodes; ++m) {
      const double phi = 2.0 * kPi * m / nodes;
      acc += samples[m] * std::exp(cdouble{0.0, -phi * static_cast<double>(k)});
    }
    out.push_back(acc / (static_cast<double>(nodes) * std::pow(radius, k)));
  }
  return out;
}

std::vector<cdouble> residue_condition(const TauFn& tau, double y,
                                       const std::vector<cdouble>& zeros, double radius,
                                       int nodes) {
  TrackOptions opts;
  std::vector<cdouble> polished(zeros.size());
  for (size_t i = 0; i < zeros.size(); ++i) {
    polished[i] = polish_zero(tau, y, zeros[i], opts, nullptr);
  }
  std::vector<cdouble> residues(zeros.size());
  for (size_t i = 0; i < zeros.size(); ++i) {
    double r = radius;
    if (r <= 0.0) {
      double nearest = 0.5;
      for (size_t j = 0; j < polished.size(); ++j) {
        if (j != i) nearest = std::min(nearest, std::abs(polished[i] - polished[j]));
      }
      r = std::clamp(0.2 * nearest, 1e-4, 0.2);
    }
    // Contour integral of d_y^2 log tau + 2 (d_x^2 log tau)^2 around the zero.
    cdouble acc{0.0, 0.0};
    for (int m = 0; m < nodes; ++m) {
      const double phi = 2.0 * kPi * m / nodes;
      const cdouble offset = r * std::exp(cdouble{0.0, phi});
      const TauJet j = tau(polished[i] + offset, y);
      const cdouble ly2 = j.fyy / j.f - (j.fy / j.f) * (j.fy / j.f);
      const cdouble lx2 = j.fxx / j.f - (j.fx / j.f) * (j.fx / j.f);
      acc += (ly2 + 2.0 * lx2 * lx2) * offset;
    }
    residues[i] = acc / static_cast<double>(nodes);
  }
  return residues;
}

}  // namespace schottky
