#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "schottky/theta.hpp"
#include "schottky/types.hpp"

namespace schottky {

// Interaction kernel family for the pole system.  In every case the field is
// u(x) = 2 sum_j K(x - x_j) and the poles obey xdd_i = 2 w_i, where w_i is
// the linear Laurent coefficient of u at x_i:
//   rational:       K(s) = 1/s^2,        xdd_i = -8 sum 1/(x_i-x_j)^3
//   trigonometric:  K(s) = 1/sin^2(s),   xdd_i = -8 sum cos/sin^3 (x_i-x_j)
//   elliptic:       K(s) = wp(s),        xdd_i =  4 sum wp'(x_i-x_j)
enum class CMKind { rational, trigonometric, elliptic };

struct CMState {
  CMKind kind = CMKind::rational;
  double y = 0.0;
  std::vector<cdouble> x;  // positions
  std::vector<cdouble> p;  // velocities dx/dy
  cdouble period1{0.0, 0.0};  // elliptic kernel lattice, ignored otherwise
  cdouble period2{0.0, 0.0};
};

// Accelerations of the current configuration.
std::vector<cdouble> cm_rhs(const CMState& state);

// Conserved energy: H = 1/2 sum p_i^2 - 4 sum_{i<j} K(x_i - x_j).
cdouble cm_hamiltonian(const CMState& state);

struct CMOptions {
  double tol = 1e-12;      // local error target per step
  double min_sep = 1e-6;   // below this pairwise distance the run aborts
  double h_max = 0.25;
  long max_steps = 2000000;
};

// Dense trajectory: accepted integrator nodes carry position, velocity and
// acceleration, and evaluation between nodes uses quintic Hermite pieces, so
// interpolated states keep the integrator's accuracy.
class Trajectory {
 public:
  struct Node {
    double y;
    std::vector<cdouble> x, p, a;
  };

  CMState at(double y) const;
  double y_begin() const { return nodes_.front().y; }
  double y_end() const { return nodes_.back().y; }
  int particles() const { return static_cast<int>(nodes_.front().x.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  CMKind kind() const { return kind_; }

  // y followed by re/im of every position and velocity, one row per sample,
  // deterministic %.17g formatting.
  std::string to_csv(int samples) const;

 private:
  friend Trajectory cm_integrate(const CMState&, double, const CMOptions&);
  std::vector<Node> nodes_;
  CMKind kind_ = CMKind::rational;
  cdouble period1_{0.0, 0.0}, period2_{0.0, 0.0};
};

// Adaptive Dormand-Prince integration from state.y to y_end (either
// direction).  Throws CollisionError when particles approach closer than
// min_sep and PrecisionError if the step size collapses for other reasons.
Trajectory cm_integrate(const CMState& state, double y_end, const CMOptions& opts = {});

// Local data of a tau function at one point: value and the derivatives the
// zero trackers and residue tests consume.
struct TauJet {
  cdouble f, fx, fy, fxx, fxy, fyy;
};
using TauFn = std::function<TauJet(cdouble x, double y)>;

// tau(x, y) = theta(U x + V y + Z | B).
TauFn theta_tau(const RiemannMatrix& B, const KPVectors& vecs,
                const TruncationSpec& trunc = {});

// tau(x, y) = prod_i (x - x_i(y)) along a trajectory.
TauFn product_tau(const Trajectory& traj);

// Same product form over explicit pole paths: the callback fills positions,
// velocities and accelerations at the requested y.  The jets use exactly what
// the callback reports, so deliberately inconsistent paths (stale or frozen
// derivatives) expose themselves through the residue condition.
using PolePaths = std::function<void(double y, std::vector<cdouble>& x,
                                     std::vector<cdouble>& v, std::vector<cdouble>& a)>;
TauFn product_tau(const PolePaths& paths);

struct ZeroPath {
  std::vector<double> y;
  std::vector<cdouble> x;
  std::vector<cdouble> xdot;  // -tau_y / tau_x on the track
};

struct TrackOptions {
  int samples = 50;
  int newton_cap = 60;
  double newton_tol = 1e-13;
};

// Continues each seed zero of tau(., y0) over [y0, y1] by predictor-corrector
// Newton steps.  Throws PathError when Newton stalls or the zero collides
// with a branching of the track.
std::vector<ZeroPath> track_zeros(const TauFn& tau, const std::vector<cdouble>& seeds,
                                  double y0, double y1, const TrackOptions& opts = {});

// Laurent coefficients c_k (k_lo <= k <= k_hi) of f around `center` from a
// trapezoid contour of `nodes` points at the given radius.
std::vector<cdouble> laurent_coeffs(const std::function<cdouble(cdouble)>& f,
                                    cdouble center, int k_lo, int k_hi, double radius,
                                    int nodes = 64);

// Residue of d_y^2 log tau + 2 (d_x^2 log tau)^2 at each listed zero of
// tau(., y), after polishing the zero by Newton.  Vanishing residues are the
// pointwise certificate that the zero motion is the pole system's motion.
std::vector<cdouble> residue_condition(const TauFn& tau, double y,
                                       const std::vector<cdouble>& zeros,
                                       double radius = 0.0, int nodes = 32);

}  // namespace schottky
