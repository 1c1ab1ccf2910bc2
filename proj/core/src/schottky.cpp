#include "schottky/schottky.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "schottky/ufield.hpp"

namespace schottky {

namespace {

// Input stamp for reports: FNV over the flattened numeric inputs, so reruns
// with identical parameters carry an identical seed field.
std::uint64_t stamp(std::initializer_list<double> extra,
                    std::initializer_list<const VectorXcd*> vecs) {
  std::vector<double> flat(extra);
  for (const VectorXcd* v : vecs) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      flat.push_back((*v)[i].real());
      flat.push_back((*v)[i].imag());
    }
  }
  return hash_doubles(flat.data(), flat.size());
}

// Characteristic vector for one enumeration index: bit i set means eps_i = 1/2.
VectorXd char_bits(int mask, int g) {
  VectorXd eps = VectorXd::Zero(g);
  for (int i = 0; i < g; ++i) {
    if (mask & (1 << i)) eps[i] = 0.5;
  }
  return eps;
}

// Batched values of T[eps](z) = theta[eps,0](2z | 2B) and its directional
// derivatives, one lattice sweep per characteristic.  The caller supplies the
// doubled matrix once; the chain factor 2 per derivative order is applied
// here so results are derivatives with respect to z.
std::vector<ThetaResult> level2_multi(const VectorXd& eps, const VectorXcd& z,
                                      const RiemannMatrix& B2,
                                      const std::vector<VectorXcd>& dirs,
                                      const std::vector<std::vector<int>>& multisets,
                                      const TruncationSpec& trunc) {
  std::vector<ThetaResult> out = theta_multi(2.0 * z, B2, dirs, multisets, trunc, &eps);
  for (std::size_t k = 0; k < multisets.size(); ++k) {
    const double chain = std::pow(2.0, static_cast<double>(multisets[k].size()));
    out[k].value *= chain;
    out[k].scale *= chain;
    out[k].tail *= chain;
  }
  return out;
}

double gauss_draw(std::mt19937_64& rng, std::uniform_real_distribution<double>& u01) {
  const double u1 = 1.0 - u01(rng);
  const double u2 = u01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// theta restricted to the line Z0 + t d, with its derivative along the line,
// both from a single sweep.
struct LineFn {
  const RiemannMatrix& B;
  const VectorXcd& Z0;
  const VectorXcd& d;
  const TruncationSpec& trunc;

  std::array<ThetaResult, 2> eval(cdouble t) const {
    auto r = theta_multi(Z0 + t * d, B, {d}, {{}, {0}}, trunc);
    return {r[0], r[1]};
  }
};

// Damped Newton polish of a zero of theta on the line.  Succeeds when the
// value drops below 1e-13 of the series scale while staying within t_max.
bool newton_on_line(const LineFn& f, cdouble& t, double t_max) {
  cdouble cur = t;
  auto r = f.eval(cur);
  for (int iter = 0; iter < 60; ++iter) {
    if (std::abs(r[0].value) <= 1e-13 * r[0].scale) {
      t = cur;
      return true;
    }
    if (std::abs(r[1].value) < 1e-14 * r[1].scale) return false;
    const cdouble step = -r[0].value / r[1].value;
    double damp = 1.0;
    bool moved = false;
    for (int h = 0; h < 9; ++h) {
      const cdouble trial = cur + damp * step;
      auto rt = f.eval(trial);
      if (std::abs(rt[0].value) < std::abs(r[0].value)) {
        cur = trial;
        r = rt;
        moved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!moved || std::abs(cur) > t_max) return false;
  }
  return false;
}

// Winding number of theta along a circle around t0, trapezoid rule with the
// exact logarithmic derivative.  Returns a value far from any integer when a
// sample lands on a zero, which callers treat as failure.
cdouble winding_number(const LineFn& f, cdouble t0, double radius, int samples) {
  cdouble acc{0.0, 0.0};
  for (int k = 0; k < samples; ++k) {
    const double phi = 2.0 * kPi * k / samples;
    const cdouble e = std::polar(radius, phi);
    auto r = f.eval(t0 + e);
    if (std::abs(r[0].value) < 1e-15 * r[0].scale) return cdouble(1e9, 0.0);
    acc += r[1].value / r[0].value * e;
  }
  return acc / static_cast<double>(samples);
}

// Locates one certified zero of theta on the line inside the centered square
// of the given half width: coarse modulus scan, Newton from the three best
// starts, winding-number certificate around the polished point.
bool find_zero_on_line(const LineFn& f, double half_width, cdouble& t_out) {
  const int n = 21;
  std::vector<double> ratio(n * n);
  std::vector<cdouble> at(n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const cdouble t(-half_width + 2.0 * half_width * a / (n - 1),
                      -half_width + 2.0 * half_width * b / (n - 1));
      const ThetaResult r = theta(f.Z0 + t * f.d, f.B, f.trunc);
      ratio[a * n + b] = std::abs(r.value) / r.scale;
      at[a * n + b] = t;
    }
  }
  std::vector<int> order(ratio.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ratio[a] < ratio[b]; });
  for (int c = 0; c < 3; ++c) {
    cdouble t = at[order[c]];
    if (!newton_on_line(f, t, 2.0 * half_width)) continue;
    const cdouble w = winding_number(f, t, 1e-4, 32);
    if (std::abs(w - 1.0) < 0.2) {
      t_out = t;
      return true;
    }
  }
  return false;
}

// Shared core of the on-divisor criterion: normalized complex defect per
// sample point, with the exclusion and drift accounting.  `mask` freezes the
// set of points to evaluate (used by the polish, which needs a residual
// vector of fixed dimension); without it every certified point is visited.
struct DivisorEval {
  std::vector<cdouble> defects;   // F / (sum of term magnitudes), usable points
  int excluded = 0;               // U-derivative under the singular floor
  int skipped = 0;                // drifted off the divisor or zero denominator
  double scale_sum = 0.0;
};

DivisorEval eval_divisor(const RiemannMatrix& B, const VectorXcd& U, const VectorXcd& V,
                         const DivisorSample& sample, const TruncationSpec& trunc,
                         const std::vector<char>* mask = nullptr) {
  static const std::vector<std::vector<int>> msets = {
      {0}, {1}, {0, 0}, {0, 0, 0}, {0, 0, 0, 0}, {0, 1}, {1, 1}, {}};
  const std::vector<VectorXcd> dirs = {U, V};
  DivisorEval ev;
  for (std::size_t k = 0; k < sample.points.size(); ++k) {
    if (mask && !(*mask)[k]) continue;
    auto r = theta_multi(sample.points[k], B, dirs, msets, trunc);
    const cdouble t1 = r[0].value, t2 = r[1].value, t11 = r[2].value,
                  t111 = r[3].value, t1111 = r[4].value, t12 = r[5].value,
                  t22 = r[6].value;
    if (!mask) {
      if (std::abs(r[7].value) > 1e-8 * r[7].scale) {
        ev.skipped += 1;
        continue;
      }
      if (std::abs(t1) < 1e-6 * r[0].scale) {
        ev.excluded += 1;
        continue;
      }
    }
    const cdouble F = (t2 * t2 - t11 * t11) * t11 +
                      2.0 * (t11 * t111 - t2 * t12) * t1 +
                      (t22 - t1111) * t1 * t1;
    const double den = std::abs(t2 * t2 * t11) + std::abs(t11 * t11 * t11) +
                       2.0 * std::abs(t11 * t111 * t1) + 2.0 * std::abs(t2 * t12 * t1) +
                       std::abs(t22 * t1 * t1) + std::abs(t1111 * t1 * t1);
    if (!(den > 0.0)) {
      ev.skipped += 1;
      continue;
    }
    ev.defects.push_back(F / den);
    ev.scale_sum += den;
  }
  return ev;
}

// Usability flags for the current U, matching the unmasked eval_divisor walk.
std::vector<char> usable_mask(const RiemannMatrix& B, const VectorXcd& U,
                              const DivisorSample& sample, const TruncationSpec& trunc) {
  std::vector<char> mask(sample.points.size(), 0);
  for (std::size_t k = 0; k < sample.points.size(); ++k) {
    auto r = theta_multi(sample.points[k], B, {U}, {{}, {0}}, trunc);
    mask[k] = std::abs(r[0].value) <= 1e-8 * r[0].scale &&
              std::abs(r[1].value) >= 1e-6 * r[1].scale;
  }
  return mask;
}

// Plain Nelder-Mead over R^n with deterministic tie breaking.  Overwrites x
// with the best vertex and returns its value.
double nelder_mead(const std::function<double(const VectorXd&)>& fn, VectorXd& x,
                   double step, int max_iters) {
  const int n = static_cast<int>(x.size());
  std::vector<VectorXd> pts(n + 1, x);
  std::vector<double> val(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) val[i] = fn(pts[i]);

  for (int it = 0; it < max_iters; ++it) {
    std::vector<int> ord(n + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
    std::vector<VectorXd> spts(n + 1);
    std::vector<double> sval(n + 1);
    for (int i = 0; i <= n; ++i) {
      spts[i] = pts[ord[i]];
      sval[i] = val[ord[i]];
    }
    pts.swap(spts);
    val.swap(sval);
    if (val[n] - val[0] < 1e-15 * (1.0 + std::abs(val[0]))) break;

    VectorXd centroid = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    const VectorXd xr = centroid + (centroid - pts[n]);
    const double fr = fn(xr);
    if (fr < val[0]) {
      const VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
      const double fe = fn(xe);
      if (fe < fr) {
        pts[n] = xe;
        val[n] = fe;
      } else {
        pts[n] = xr;
        val[n] = fr;
      }
    } else if (fr < val[n - 1]) {
      pts[n] = xr;
      val[n] = fr;
    } else {
      const bool outside = fr < val[n];
      VectorXd xc;
      if (outside) {
        xc = centroid + 0.5 * (xr - centroid);
      } else {
        xc = centroid - 0.5 * (centroid - pts[n]);
      }
      const double fc = fn(xc);
      if (fc < std::min(fr, val[n])) {
        pts[n] = xc;
        val[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = fn(pts[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (val[i] < val[best]) best = i;
  }
  x = pts[best];
  return val[best];
}

// Search scaffolding: packing of (U, V) into real coordinates and back.
VectorXd pack_uv(const VectorXcd& U, const VectorXcd& V) {
  const int g = static_cast<int>(U.size());
  VectorXd q(4 * g);
  for (int i = 0; i < g; ++i) {
    q[2 * i] = U[i].real();
    q[2 * i + 1] = U[i].imag();
    q[2 * g + 2 * i] = V[i].real();
    q[2 * g + 2 * i + 1] = V[i].imag();
  }
  return q;
}

std::pair<VectorXcd, VectorXcd> unpack_uv(const VectorXd& q) {
  const int g = static_cast<int>(q.size()) / 4;
  VectorXcd U(g), V(g);
  for (int i = 0; i < g; ++i) {
    U[i] = cdouble(q[2 * i], q[2 * i + 1]);
    V[i] = cdouble(q[2 * g + 2 * i], q[2 * g + 2 * i + 1]);
  }
  return {U, V};
}

// V-independent jet data of theta at one divisor point: derivatives along U
// up to fourth order, the coordinate gradient, the gradient of the
// U-derivative, and the coordinate Hessian, all from one sweep.
struct PointJets {
  cdouble t1, t11, t111, t1111;
  VectorXcd grad;
  VectorXcd mixed;
  MatrixXcd hess;
  bool usable = true;
};

std::vector<PointJets> point_jets(const RiemannMatrix& B, const VectorXcd& U,
                                  const DivisorSample& sample,
                                  const TruncationSpec& trunc) {
  const int g = B.g();
  std::vector<VectorXcd> dirs;
  dirs.push_back(U);
  for (int i = 0; i < g; ++i) {
    VectorXcd e = VectorXcd::Zero(g);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  std::vector<std::vector<int>> msets = {{0}, {0, 0}, {0, 0, 0}, {0, 0, 0, 0}};
  for (int i = 0; i < g; ++i) msets.push_back({1 + i});
  for (int i = 0; i < g; ++i) msets.push_back({0, 1 + i});
  for (int i = 0; i < g; ++i) {
    for (int j = i; j < g; ++j) msets.push_back({1 + i, 1 + j});
  }
  std::vector<PointJets> jets(sample.points.size());
  for (std::size_t k = 0; k < sample.points.size(); ++k) {
    auto r = theta_multi(sample.points[k], B, dirs, msets, trunc);
    PointJets& pj = jets[k];
    pj.t1 = r[0].value;
    pj.t11 = r[1].value;
    pj.t111 = r[2].value;
    pj.t1111 = r[3].value;
    pj.grad.resize(g);
    pj.mixed.resize(g);
    pj.hess.resize(g, g);
    for (int i = 0; i < g; ++i) pj.grad[i] = r[4 + i].value;
    for (int i = 0; i < g; ++i) pj.mixed[i] = r[4 + g + i].value;
    int idx = 4 + 2 * g;
    for (int i = 0; i < g; ++i) {
      for (int j = i; j < g; ++j) {
        pj.hess(i, j) = r[idx].value;
        pj.hess(j, i) = r[idx].value;
        ++idx;
      }
    }
    pj.usable = std::abs(pj.t1) >= 1e-6 * r[0].scale;
  }
  return jets;
}

// For fixed U the criterion is linear in the symmetric matrix S standing in
// for V V^T.  Fits S by least squares over the sample and returns the mean
// normalized residual of the fitted system; the optimum S is written out when
// requested.  This is the relaxation that turns the joint search into a walk
// over U alone.
double s_relaxation(const RiemannMatrix& B, const VectorXcd& U, const DivisorSample& sample,
                    const TruncationSpec& trunc, MatrixXcd* S_out) {
  const int g = B.g();
  const int m = g * (g + 1) / 2;
  const auto jets = point_jets(B, U, sample, trunc);
  std::vector<const PointJets*> use;
  for (const auto& pj : jets) {
    if (pj.usable) use.push_back(&pj);
  }
  if (static_cast<int>(use.size()) < m) return 1.0;

  // Row k: <S, C_k> = rhs_k with C_k = t11 G - 2 t1 M + t1^2 H, everything
  // symmetric, encoded over the upper triangle with doubled off-diagonals.
  MatrixXcd rows(use.size(), m);
  VectorXcd rhs(use.size());
  std::vector<MatrixXcd> cmats(use.size());
  for (std::size_t k = 0; k < use.size(); ++k) {
    const PointJets& pj = *use[k];
    const MatrixXcd G = pj.grad * pj.grad.transpose();
    const MatrixXcd M = 0.5 * (pj.grad * pj.mixed.transpose() + pj.mixed * pj.grad.transpose());
    cmats[k] = pj.t11 * G - 2.0 * pj.t1 * M + pj.t1 * pj.t1 * pj.hess;
    rhs[k] = pj.t11 * pj.t11 * pj.t11 - 2.0 * pj.t1 * pj.t11 * pj.t111 +
             pj.t1111 * pj.t1 * pj.t1;
    const double w = 1.0 / std::max(std::abs(rhs[k]) + cmats[k].cwiseAbs().maxCoeff(), 1e-300);
    int idx = 0;
    for (int i = 0; i < g; ++i) {
      for (int j = i; j < g; ++j) {
        rows(k, idx) = (i == j ? cmats[k](i, i) : 2.0 * cmats[k](i, j)) * w;
        ++idx;
      }
    }
    rhs[k] *= w;
  }
  const VectorXcd s = rows.colPivHouseholderQr().solve(rhs);
  MatrixXcd S(g, g);
  {
    int idx = 0;
    for (int i = 0; i < g; ++i) {
      for (int j = i; j < g; ++j) {
        S(i, j) = s[idx];
        S(j, i) = s[idx];
        ++idx;
      }
    }
  }
  if (S_out) *S_out = S;

  double total = 0.0;
  for (std::size_t k = 0; k < use.size(); ++k) {
    const PointJets& pj = *use[k];
    const cdouble sg = (pj.grad.transpose() * S * pj.grad)(0, 0);
    const cdouble sm = (pj.grad.transpose() * S * pj.mixed)(0, 0);
    const cdouble sh = (S.cwiseProduct(pj.hess)).sum();
    const cdouble F = sg * pj.t11 - pj.t11 * pj.t11 * pj.t11 +
                      2.0 * (pj.t11 * pj.t111 * pj.t1 - sm * pj.t1) +
                      (sh - pj.t1111) * pj.t1 * pj.t1;
    const double den = std::abs(sg * pj.t11) + std::abs(pj.t11 * pj.t11 * pj.t11) +
                       2.0 * std::abs(pj.t1 * pj.t11 * pj.t111) + 2.0 * std::abs(sm * pj.t1) +
                       std::abs(sh * pj.t1 * pj.t1) + std::abs(pj.t1111 * pj.t1 * pj.t1);
    total += den > 0.0 ? std::abs(F) / den : 0.0;
  }
  return total / static_cast<double>(use.size());
}

// Rank one factor of the fitted S: for S close to V V^T the column with the
// largest diagonal entry is V scaled by that component.
VectorXcd rank_one_factor(const MatrixXcd& S) {
  const int g = static_cast<int>(S.rows());
  int c = 0;
  for (int i = 1; i < g; ++i) {
    if (std::abs(S(i, i)) > std::abs(S(c, c))) c = i;
  }
  if (std::abs(S(c, c)) < 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    return VectorXcd::Zero(g);
  }
  return S.col(c) / std::sqrt(S(c, c));
}

// Damped Gauss-Newton on the stacked per-point defects, with anchor rows that
// pin the flat gauge directions.  The usable-point mask is frozen at entry so
// the residual vector keeps a fixed dimension.
void gauss_newton_polish(const RiemannMatrix& B, const DivisorSample& sample,
                         const TruncationSpec& trunc, VectorXcd& U, VectorXcd& V) {
  const std::vector<char> mask = usable_mask(B, U, sample, trunc);
  int usable = 0;
  for (char c : mask) usable += c;
  if (usable == 0) return;

  auto residual = [&](const VectorXd& q) -> VectorXd {
    auto [Uq, Vq] = unpack_uv(q);
    const DivisorEval ev = eval_divisor(B, Uq, Vq, sample, trunc, &mask);
    VectorXd r(2 * ev.defects.size() + 4);
    for (std::size_t k = 0; k < ev.defects.size(); ++k) {
      r[2 * k] = ev.defects[k].real();
      r[2 * k + 1] = ev.defects[k].imag();
    }
    Eigen::Index lead = 0;
    const double floor = 1e-12 * Uq.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < Uq.size(); ++i) {
      if (std::abs(Uq[i]) > floor) {
        lead = i;
        break;
      }
    }
    const cdouble uv = Uq.dot(Vq);
    const double vnorm = std::max(1.0, Vq.norm());
    r[2 * ev.defects.size()] = Uq.norm() - 1.0;
    r[2 * ev.defects.size() + 1] = Uq[lead].imag();
    r[2 * ev.defects.size() + 2] = uv.real() / vnorm;
    r[2 * ev.defects.size() + 3] = uv.imag() / vnorm;
    return r;
  };

  VectorXd q = pack_uv(U, V);
  VectorXd r = residual(q);
  double lambda = 1e-3;
  const int n = static_cast<int>(q.size());
  for (int outer = 0; outer < 10; ++outer) {
    MatrixXd J(r.size(), n);
    const double h = 1e-6;
    for (int c = 0; c < n; ++c) {
      VectorXd qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      J.col(c) = (residual(qp) - residual(qm)) / (2.0 * h);
    }
    const MatrixXd JtJ = J.transpose() * J;
    const VectorXd Jtr = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 8; ++tries) {
      const MatrixXd damped = JtJ + lambda * MatrixXd::Identity(n, n);
      const VectorXd delta = damped.ldlt().solve(-Jtr);
      const VectorXd qn = q + delta;
      const VectorXd rn = residual(qn);
      if (rn.norm() < r.norm()) {
        q = qn;
        r = rn;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    if (r.norm() < 1e-14 * std::sqrt(static_cast<double>(r.size()))) break;
  }
  auto uv = unpack_uv(q);
  U = uv.first;
  V = uv.second;
}

}  // namespace

std::pair<VectorXcd, VectorXcd> gauge_fix_uv(const VectorXcd& U, const VectorXcd& V) {
  if (U.size() == 0 || V.size() != U.size()) {
    throw UsageError("gauge fix needs U and V of equal positive dimension");
  }
  const double nrm = U.norm();
  if (!(nrm > 0.0) || !U.allFinite() || !V.allFinite()) {
    throw UsageError("gauge fix needs finite vectors with U nonzero");
  }
  Eigen::Index lead = 0;
  const double floor = 1e-12 * U.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < U.size(); ++i) {
    if (std::abs(U[i]) > floor) {
      lead = i;
      break;
    }
  }
  const cdouble lambda = nrm * (U[lead] / std::abs(U[lead]));
  VectorXcd Uh = U / lambda;
  const cdouble mu = U.dot(V) / (nrm * nrm);
  VectorXcd Vh = (V - mu * U) / (lambda * lambda);
  return {std::move(Uh), std::move(Vh)};
}

ResidualReport kp_residual(const RiemannMatrix& B, const KPVectors& vecs,
                           const GridSpec& grid, double tol, const TruncationSpec& trunc) {
  const std::size_t total = grid.xs.size() * grid.ys.size() * grid.ts.size();
  if (total == 0) throw UsageError("kp_residual needs a nonempty grid in x, y and t");

  ResidualReport rep;
  rep.criterion = "kp_flow";
  rep.tol_used = tol;
  std::vector<double> coords;
  coords.insert(coords.end(), grid.xs.begin(), grid.xs.end());
  coords.insert(coords.end(), grid.ys.begin(), grid.ys.end());
  coords.insert(coords.end(), grid.ts.begin(), grid.ts.end());
  rep.seed = stamp({hash_doubles(coords.data(), coords.size()) * 1.0},
                   {&vecs.U, &vecs.V, &vecs.W, &vecs.Z});

  double scale_sum = 0.0;
  for (double x : grid.xs) {
    for (double y : grid.ys) {
      for (double t : grid.ts) {
        try {
          const KPDefect d = kp_defect(B, vecs, x, y, t, trunc);
          rep.record(d.defect);
          scale_sum += d.scale;
        } catch (const NearDivisorError&) {
          rep.skipped += 1;
        }
      }
    }
  }
  if (2 * static_cast<std::size_t>(rep.skipped) > total) {
    throw SamplingError("the near-divisor guard discarded " + std::to_string(rep.skipped) +
                        " of " + std::to_string(total) +
                        " grid points; move Z or refine the grid");
  }
  rep.normalization = scale_sum / rep.samples;
  return rep;
}

DubrovinResult dubrovin_residual(const RiemannMatrix& B, const KPVectors& vecs,
                                 double tol, const TruncationSpec& trunc) {
  const int g = B.g();
  if (vecs.U.size() != g || vecs.V.size() != g || vecs.W.size() != g) {
    throw UsageError("dubrovin_residual needs U, V, W matching the genus");
  }
  if (g > 6) throw UsageError("characteristic enumeration supported for genus <= 6");

  const RiemannMatrix B2(2.0 * B.B());
  const VectorXcd zero = VectorXcd::Zero(g);
  const std::vector<VectorXcd> dirs = {vecs.U, vecs.W, vecs.V};
  const std::vector<std::vector<int>> msets = {{0, 0, 0, 0}, {0, 1}, {2, 2}, {}};
  const int rows = 1 << g;

  VectorXcd a(rows), b(rows);
  std::vector<double> den0(rows);
  double scale_typ = 0.0;
  for (int mask = 0; mask < rows; ++mask) {
    const VectorXd eps = char_bits(mask, g);
    const auto r = level2_multi(eps, zero, B2, dirs, msets, trunc);
    a[mask] = r[3].value;
    b[mask] = -(r[0].value - 4.0 * r[1].value + 3.0 * r[2].value);
    den0[mask] = std::abs(r[0].value) + 4.0 * std::abs(r[1].value) +
                 3.0 * std::abs(r[2].value);
    scale_typ = std::max(scale_typ, r[3].scale);
  }
  const double a2 = a.squaredNorm();
  if (a2 <= 1e-20 * scale_typ * scale_typ * rows) {
    throw DegeneracyError(
        "all second-order theta constants vanish; the constant cannot be fitted");
  }
  DubrovinResult out;
  out.c = a.dot(b) / a2;
  out.report.criterion = "dubrovin_constants";
  out.report.tol_used = tol;
  out.report.seed = stamp({}, {&vecs.U, &vecs.V, &vecs.W});
  double scale_sum = 0.0;
  for (int mask = 0; mask < rows; ++mask) {
    const double den = den0[mask] + std::abs(out.c * a[mask]);
    const double num = std::abs(out.c * a[mask] - b[mask]);
    out.report.record(den > 0.0 ? num / den : 0.0);
    scale_sum += den;
  }
  out.report.normalization = scale_sum / rows;
  out.report.details["c"] = format_complex(out.c);
  return out;
}

DivisorSample sample_divisor(const RiemannMatrix& B, const VectorXcd& U, int n,
                             std::uint64_t seed, const TruncationSpec& trunc) {
  const int g = B.g();
  if (n < 1) throw UsageError("sample_divisor needs n >= 1");
  if (U.size() != g) throw UsageError("U dimension does not match the genus");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  DivisorSample out;
  out.seed = seed;
  for (int line = 0; line < n; ++line) {
    VectorXd r1(g), r2(g);
    for (int i = 0; i < g; ++i) r1[i] = u01(rng);
    for (int i = 0; i < g; ++i) r2[i] = u01(rng);
    VectorXcd d(g);
    for (int i = 0; i < g; ++i) {
      const double re = gauss_draw(rng, u01);
      const double im = gauss_draw(rng, u01);
      d[i] = cdouble(re, im);
    }
    if (!(d.norm() > 0.0)) {
      out.lines_failed += 1;
      continue;
    }
    d /= d.norm();
    const VectorXcd Z0 = r1.cast<cdouble>() + B.B() * r2.cast<cdouble>();
    const LineFn f{B, Z0, d, trunc};
    cdouble t;
    if (!find_zero_on_line(f, 1.1, t) && !find_zero_on_line(f, 2.2, t)) {
      out.lines_failed += 1;
      continue;
    }
    const VectorXcd Z = Z0 + t * d;
    auto r = theta_multi(Z, B, {U}, {{}, {0}}, trunc);
    out.points.push_back(Z);
    out.theta_ratio.push_back(std::abs(r[0].value) / r[0].scale);
    out.slope.push_back(std::abs(r[1].value) / r[1].scale);
  }
  if (out.points.empty()) {
    throw SamplingError("no divisor point could be certified on any of " +
                        std::to_string(n) + " sampled lines");
  }
  return out;
}

ResidualReport divisor_eq_residual(const RiemannMatrix& B, const VectorXcd& U,
                                   const VectorXcd& V, const DivisorSample& sample,
                                   double tol, const TruncationSpec& trunc) {
  const int g = B.g();
  if (U.size() != g || V.size() != g) {
    throw UsageError("direction dimensions do not match the genus");
  }
  if (sample.points.empty()) throw UsageError("empty divisor sample");

  auto [Uh, Vh] = gauge_fix_uv(U, V);
  const DivisorEval ev = eval_divisor(B, Uh, Vh, sample, trunc);
  if (ev.defects.empty()) {
    throw SamplingError("every divisor point was excluded or had drifted; nothing to report");
  }
  ResidualReport rep;
  rep.criterion = "divisor_equation";
  rep.tol_used = tol;
  rep.seed = sample.seed;
  for (const cdouble& f : ev.defects) rep.record(std::abs(f));
  rep.skipped = ev.skipped;
  rep.normalization = ev.scale_sum / rep.samples;
  rep.details["excluded_singular"] = std::to_string(ev.excluded);
  return rep;
}

ResidualReport flex_residual(const RiemannMatrix& B, const VectorXcd& U,
                             const VectorXcd& V, const VectorXcd& A, cdouble p,
                             cdouble E, double tol, const TruncationSpec& trunc) {
  const int g = B.g();
  if (U.size() != g || V.size() != g || A.size() != g) {
    throw UsageError("flex_residual needs U, V, A matching the genus");
  }
  if (g > 6) throw UsageError("characteristic enumeration supported for genus <= 6");

  ResidualReport rep;
  rep.criterion = "flex_system";
  rep.tol_used = tol;
  rep.seed = stamp({p.real(), p.imag(), E.real(), E.imag()}, {&U, &V, &A});

  // A at a lattice point collapses every equation to an identity; flag it.
  VectorXd n2 = B.solve_Y(A.imag());
  n2 = n2.array().round();
  VectorXd n1 = A.real() - B.B().real() * n2;
  n1 = n1.array().round();
  const VectorXcd rem = A - n1.cast<cdouble>() - B.B() * n2.cast<cdouble>();
  if (rem.norm() < 1e-8) rep.details["degenerate_flex"] = "1";

  const RiemannMatrix B2(2.0 * B.B());
  const VectorXcd half = 0.5 * A;
  const std::vector<VectorXcd> dirs = {U, V};
  const std::vector<std::vector<int>> msets = {{1}, {0, 0}, {0}, {}};
  const cdouble e2 = E - p * p;
  double scale_sum = 0.0;
  for (int mask = 0; mask < (1 << g); ++mask) {
    const VectorXd eps = char_bits(mask, g);
    const auto r = level2_multi(eps, half, B2, dirs, msets, trunc);
    const cdouble lhs = r[0].value - r[1].value - 2.0 * p * r[2].value + e2 * r[3].value;
    const double den = std::abs(r[0].value) + std::abs(r[1].value) +
                       std::abs(2.0 * p * r[2].value) + std::abs(e2 * r[3].value);
    rep.record(den > 0.0 ? std::abs(lhs) / den : 0.0);
    scale_sum += den;
  }
  rep.normalization = scale_sum / (1 << g);
  return rep;
}

SearchResult search_uv(const RiemannMatrix& B, const SearchOptions& opts,
                       const TruncationSpec& trunc) {
  const int g = B.g();
  if (g > 4) throw UsageError("direction search supported for genus <= 4");
  if (opts.multistarts < 1 || opts.sample_points < 1 || opts.simplex_iters < 1) {
    throw UsageError("search options must be positive");
  }

  const VectorXcd diag_u = VectorXcd::Constant(g, 1.0 / std::sqrt(static_cast<double>(g)));
  const DivisorSample sample = sample_divisor(B, diag_u, opts.sample_points, opts.seed, trunc);

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Stage 1: simplex walk over U with S fitted by least squares inside.
  auto u_objective = [&](const VectorXd& x) -> double {
    VectorXcd Uc(g);
    for (int i = 0; i < g; ++i) Uc[i] = cdouble(x[2 * i], x[2 * i + 1]);
    const double nrm = Uc.norm();
    if (!(nrm > 1e-8)) return 10.0;
    try {
      auto fixed = gauge_fix_uv(Uc, VectorXcd::Zero(g));
      const double val = s_relaxation(B, fixed.first, sample, trunc, nullptr);
      return val + 0.05 * (nrm - 1.0) * (nrm - 1.0);
    } catch (const NumericError&) {
      return 10.0;
    }
  };

  double best_val = 1e300;
  VectorXcd best_u;
  for (int start = 0; start < opts.multistarts; ++start) {
    VectorXd x(2 * g);
    for (int i = 0; i < 2 * g; ++i) x[i] = gauss_draw(rng, u01);
    if (!(x.norm() > 1e-8)) continue;
    x /= x.norm();
    const double val = nelder_mead(u_objective, x, 0.2, std::min(opts.simplex_iters, 150));
    if (val < best_val) {
      best_val = val;
      VectorXcd Uc(g);
      for (int i = 0; i < g; ++i) Uc[i] = cdouble(x[2 * i], x[2 * i + 1]);
      best_u = gauge_fix_uv(Uc, VectorXcd::Zero(g)).first;
    }
    if (best_val < 1e-9) break;
  }
  if (best_u.size() == 0) throw SamplingError("every direction start collapsed");

  MatrixXcd S(g, g);
  s_relaxation(B, best_u, sample, trunc, &S);
  VectorXcd V0 = rank_one_factor(S);

  // Stage 2: joint simplex refinement over (U, V).
  auto joint_objective = [&](const VectorXd& q) -> double {
    auto [Uq, Vq] = unpack_uv(q);
    const double nrm = Uq.norm();
    if (!(nrm > 1e-8)) return 10.0;
    try {
      auto fixed = gauge_fix_uv(Uq, Vq);
      const DivisorEval ev = eval_divisor(B, fixed.first, fixed.second, sample, trunc);
      if (ev.defects.empty()) return 10.0;
      double total = 0.0;
      for (const cdouble& f : ev.defects) total += std::abs(f);
      return total / ev.defects.size() + 0.05 * (nrm - 1.0) * (nrm - 1.0);
    } catch (const NumericError&) {
      return 10.0;
    }
  };
  VectorXd q = pack_uv(best_u, V0);
  nelder_mead(joint_objective, q, 0.05, opts.simplex_iters);
  auto stage2 = unpack_uv(q);
  auto fixed = gauge_fix_uv(stage2.first, stage2.second);

  // Stage 3: Gauss-Newton polish of the per-point defects.
  VectorXcd Uf = fixed.first, Vf = fixed.second;
  gauss_newton_polish(B, sample, trunc, Uf, Vf);
  std::tie(Uf, Vf) = gauge_fix_uv(Uf, Vf);

  SearchResult result;
  result.U = Uf;
  result.V = Vf;
  result.report = divisor_eq_residual(B, Uf, Vf, sample, opts.target, trunc);
  result.report.criterion = "uv_search";
  result.report.details["multistarts"] = std::to_string(opts.multistarts);
  result.report.details["relaxation_best"] = format_double(best_val);
  result.converged = result.report.max_residual <= opts.target;
  return result;
}

}  // namespace schottky
