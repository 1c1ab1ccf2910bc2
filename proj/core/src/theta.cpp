#include "schottky/theta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>

namespace schottky {

RiemannMatrix::RiemannMatrix(MatrixXcd B) : B_(std::move(B)) {
  if (B_.rows() == 0 || B_.rows() != B_.cols()) {
    throw UsageError("period matrix must be square and nonempty");
  }
  const double bscale = std::max(1.0, B_.cwiseAbs().maxCoeff());
  const double asym = (B_ - B_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * bscale) {
    throw ConventionError("period matrix must be symmetric (asymmetry " +
                          format_double(asym) + ")");
  }
  B_ = ((B_ + B_.transpose()) / 2.0).eval();
  Y_ = B_.imag();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Y_);
  lambda_min_ = es.eigenvalues().minCoeff();
  if (lambda_min_ <= 0.0) {
    throw ConventionError("imaginary part of the period matrix must be positive definite "
                          "(smallest eigenvalue " + format_double(lambda_min_) + ")");
  }
  llt_.compute(Y_);
}

namespace {

// Weight profile of one derivative multiset, used only for tail bounds:
// |prod 2 pi i (d_k, mu)| <= coeff * |mu|^order with coeff = prod 2 pi |d_k|.
struct WeightProfile {
  double coeff = 1.0;
  int order = 0;
};

struct LatticePlan {
  VectorXd delta0;      // real shift folded into the index, mu = n + delta0
  VectorXcd v_eff;      // v + B delta0
  cdouble prefactor;    // exp(pi i (B d0, d0) + 2 pi i (v, d0))
  double pref_mag = 1.0;
  double gauss_peak = 1.0;  // exp(pi (Y c, c)) for the recentered mode c
  double r0 = 0.0;          // |c|
  double d0_norm = 0.0;
  int radius = 0;
};

// Certified bound on the terms outside |n| <= R, per weight profile.  Points
// are grouped by sup-norm shells; each point in shell j satisfies |n| >= j
// and |n| <= sqrt(g) j, which bounds the Gaussian and the polynomial weight
// respectively.
double tail_bound(const LatticePlan& plan, const RiemannMatrix& rm,
                  const WeightProfile& w, int R) {
  const int g = rm.g();
  const double sg = std::sqrt(static_cast<double>(g));
  const double lam = rm.lambda_min();
  const int j0 = static_cast<int>(std::floor(R / sg)) + 1;
  double total = 0.0;
  double shell_lo = std::pow(2.0 * j0 - 1.0, g);
  for (int j = j0; j < j0 + 100000; ++j) {
    const double shell_hi = std::pow(2.0 * j + 1.0, g);
    const double count = shell_hi - shell_lo;
    shell_lo = shell_hi;
    const double dist = std::max(static_cast<double>(j), static_cast<double>(R)) - plan.r0;
    const double gauss = std::exp(-kPi * lam * dist * dist);
    const double reach = sg * j + plan.d0_norm;
    const double term = count * w.coeff * std::pow(reach, w.order) * gauss;
    total += term;
    // Terms rise at most polynomially before the Gaussian wins, after which
    // they fall off doubly exponentially; a relative cutoff is safe once the
    // decaying regime has clearly started.
    if (term == 0.0 || (j > j0 + 2 && term < 1e-9 * total)) break;
  }
  return plan.gauss_peak * plan.pref_mag * total;
}

LatticePlan make_plan(const RiemannMatrix& rm, const VectorXcd& v, const VectorXd& eps,
                      const std::vector<WeightProfile>& weights,
                      const TruncationSpec& trunc) {
  const int g = rm.g();
  LatticePlan plan;
  const VectorXd c_w = -rm.solve_Y(v.imag());
  VectorXd n_star(g);
  for (int i = 0; i < g; ++i) n_star[i] = std::round(c_w[i] - eps[i]);
  plan.delta0 = eps + n_star;
  plan.v_eff = v + rm.B() * plan.delta0.cast<cdouble>();
  const cdouble q0 = bilinear(rm.B() * plan.delta0.cast<cdouble>(), plan.delta0);
  plan.prefactor = std::exp(kI * kPi * q0 + kTwoPiI * bilinear(v, plan.delta0));
  plan.pref_mag = std::abs(plan.prefactor);
  const VectorXd c = c_w - plan.delta0;
  plan.r0 = c.norm();
  plan.d0_norm = plan.delta0.norm();
  plan.gauss_peak = std::exp(kPi * c.dot(rm.Y() * c));

  const int r_min = static_cast<int>(std::ceil(plan.r0)) + 1;
  for (int R = r_min; R <= trunc.radius_cap; ++R) {
    double worst = 0.0;
    for (const auto& w : weights) worst = std::max(worst, tail_bound(plan, rm, w, R));
    if (worst <= trunc.tol) {
      plan.radius = R;
      return plan;
    }
  }
  throw TruncationError("lattice radius cap " + std::to_string(trunc.radius_cap) +
                        " cannot certify tolerance " + format_double(trunc.tol) +
                        " (smallest eigenvalue of Im B is " +
                        format_double(rm.lambda_min()) + ")");
}

// Visits one representative of every pair {n, -n} with 0 < |n|^2 <= R2.
// The representative has its first nonzero coordinate positive, and the
// visit order is a fixed lexicographic scan, so sums are reproducible.
void for_each_lattice_pair(int g, double R2,
                           const std::function<void(const VectorXi&)>& visit) {
  VectorXi n(g);
  std::function<void(int, double, bool)> recurse = [&](int k, double remaining, bool prefix_zero) {
    if (k == g) {
      if (!prefix_zero) visit(n);
      return;
    }
    const int kmax = static_cast<int>(std::floor(std::sqrt(std::max(0.0, remaining))));
    const int kmin = prefix_zero ? 0 : -kmax;
    for (int val = kmin; val <= kmax; ++val) {
      const double used = static_cast<double>(val) * val;
      if (used > remaining) continue;
      n[k] = val;
      recurse(k + 1, remaining - used, prefix_zero && val == 0);
    }
  };
  recurse(0, R2, true);
}

}  // namespace

std::vector<ThetaResult> theta_multi(const VectorXcd& z, const RiemannMatrix& B,
                                     const std::vector<VectorXcd>& dirs,
                                     const std::vector<std::vector<int>>& multisets,
                                     const TruncationSpec& trunc,
                                     const VectorXd* eps) {
  const int g = B.g();
  if (z.size() != g) throw UsageError("argument dimension does not match genus");
  for (const auto& d : dirs) {
    if (d.size() != g) throw UsageError("derivative direction dimension does not match genus");
  }
  if (multisets.empty()) throw UsageError("at least one derivative multiset is required");
  std::vector<WeightProfile> weights(multisets.size());
  for (size_t m = 0; m < multisets.size(); ++m) {
    if (multisets[m].size() > 8) {
      throw UsageError("derivative order " + std::to_string(multisets[m].size()) +
                       " exceeds the supported maximum of 8");
    }
    for (int idx : multisets[m]) {
      if (idx < 0 || idx >= static_cast<int>(dirs.size())) {
        throw UsageError("derivative multiset references a missing direction");
      }
      weights[m].coeff *= 2.0 * kPi * dirs[idx].norm();
      weights[m].order += 1;
    }
  }
  VectorXd eps_zero = VectorXd::Zero(g);
  const VectorXd& a = eps ? *eps : eps_zero;
  if (a.size() != g) throw UsageError("characteristic dimension does not match genus");

  LatticePlan plan = make_plan(B, z, a, weights, trunc);

  // Per-direction constants: (d, delta0) and, per lattice point, (d, n).
  std::vector<cdouble> d_shift(dirs.size());
  for (size_t i = 0; i < dirs.size(); ++i) d_shift[i] = bilinear(dirs[i], plan.delta0);

  std::vector<cdouble> acc(multisets.size(), cdouble{0.0, 0.0});
  double max_term = 1.0;  // n = 0 contributes |T| = 1

  // n = 0 term: T = 1, weights use mu = delta0 only.
  for (size_t m = 0; m < multisets.size(); ++m) {
    cdouble w{1.0, 0.0};
    for (int idx : multisets[m]) w *= kTwoPiI * d_shift[idx];
    acc[m] += w;
  }

  std::vector<cdouble> d_dot(dirs.size());
  const double R2 = static_cast<double>(plan.radius) * plan.radius;
  for_each_lattice_pair(g, R2, [&](const VectorXi& n) {
    cdouble q{0.0, 0.0}, l{0.0, 0.0};
    for (int i = 0; i < g; ++i) {
      const double ni = n[i];
      cdouble row{0.0, 0.0};
      for (int j = 0; j < g; ++j) row += B.B()(i, j) * static_cast<double>(n[j]);
      q += ni * row;
      l += ni * plan.v_eff[i];
    }
    for (size_t i = 0; i < dirs.size(); ++i) {
      cdouble s{0.0, 0.0};
      for (int j = 0; j < g; ++j) s += dirs[i][j] * static_cast<double>(n[j]);
      d_dot[i] = s;
    }
    const cdouble quad = kI * kPi * q;
    const cdouble lin = kTwoPiI * l;
    const cdouble t_plus = std::exp(quad + lin);
    const cdouble t_minus = std::exp(quad - lin);
    max_term = std::max({max_term, std::abs(t_plus), std::abs(t_minus)});
    for (size_t m = 0; m < multisets.size(); ++m) {
      cdouble w_plus{1.0, 0.0}, w_minus{1.0, 0.0};
      for (int idx : multisets[m]) {
        w_plus *= kTwoPiI * (d_dot[idx] + d_shift[idx]);
        w_minus *= kTwoPiI * (-d_dot[idx] + d_shift[idx]);
      }
      acc[m] += w_plus * t_plus + w_minus * t_minus;
    }
  });

  std::vector<ThetaResult> out(multisets.size());
  for (size_t m = 0; m < multisets.size(); ++m) {
    out[m].value = plan.prefactor * acc[m];
    out[m].scale = plan.pref_mag * max_term;
    out[m].tail = tail_bound(plan, B, weights[m], plan.radius);
    out[m].radius = plan.radius;
  }
  return out;
}

ThetaResult theta(const VectorXcd& z, const RiemannMatrix& B, const TruncationSpec& trunc) {
  return theta_multi(z, B, {}, {{}}, trunc)[0];
}

ThetaResult theta_deriv(const VectorXcd& z, const RiemannMatrix& B,
                        const std::vector<VectorXcd>& dirs, const TruncationSpec& trunc) {
  std::vector<int> all(dirs.size());
  for (size_t i = 0; i < dirs.size(); ++i) all[i] = static_cast<int>(i);
  return theta_multi(z, B, dirs, {all}, trunc)[0];
}

ThetaResult theta_char(const VectorXcd& z, const RiemannMatrix& B, const Characteristic& chi,
                       const std::vector<VectorXcd>& dirs, const TruncationSpec& trunc) {
  const int g = B.g();
  if (chi.eps.size() != g || chi.delta.size() != g) {
    throw UsageError("characteristic dimension does not match genus");
  }
  std::vector<int> all(dirs.size());
  for (size_t i = 0; i < dirs.size(); ++i) all[i] = static_cast<int>(i);
  const VectorXcd v = z + chi.delta.cast<cdouble>();
  return theta_multi(v, B, dirs, {all}, trunc, &chi.eps)[0];
}

ThetaResult level2_theta(const VectorXd& eps, const VectorXcd& z, const RiemannMatrix& B,
                         const std::vector<VectorXcd>& dirs, const TruncationSpec& trunc) {
  RiemannMatrix B2(2.0 * B.B());
  std::vector<int> all(dirs.size());
  for (size_t i = 0; i < dirs.size(); ++i) all[i] = static_cast<int>(i);
  ThetaResult r = theta_multi(2.0 * z, B2, dirs, {all}, trunc, &eps)[0];
  // Chain rule for the doubled argument: one factor 2 per derivative order.
  const double chain = std::pow(2.0, static_cast<double>(dirs.size()));
  r.value *= chain;
  r.tail *= chain;
  r.scale *= chain;
  return r;
}

const std::vector<std::vector<std::vector<int>>>& set_partitions(int n) {
  if (n < 0 || n > 8) throw UsageError("set partitions supported for 0 <= n <= 8");
  static std::map<int, std::vector<std::vector<std::vector<int>>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<std::vector<std::vector<int>>> parts;
  std::vector<std::vector<int>> current;
  std::function<void(int)> place = [&](int elem) {
    if (elem == n) {
      parts.push_back(current);
      return;
    }
    const size_t blocks_here = current.size();  // recursion appends and removes blocks
    for (size_t b = 0; b < blocks_here; ++b) {
      current[b].push_back(elem);
      place(elem + 1);
      current[b].pop_back();
    }
    current.push_back({elem});
    place(elem + 1);
    current.pop_back();
  };
  if (n == 0) {
    parts.push_back({});
  } else {
    place(0);
  }
  return cache.emplace(n, std::move(parts)).first->second;
}

std::vector<cdouble> theta_log_deriv_batch(const VectorXcd& z, const RiemannMatrix& B,
                                           const std::vector<VectorXcd>& dirs,
                                           const std::vector<std::vector<int>>& targets,
                                           const TruncationSpec& trunc) {
  const int nd = static_cast<int>(dirs.size());
  if (targets.empty()) throw UsageError("at least one derivative target is required");
  std::vector<int> max_counts(nd, 0);
  for (const auto& counts : targets) {
    if (static_cast<int>(counts.size()) != nd) {
      throw UsageError("one count per direction is required");
    }
    for (int i = 0; i < nd; ++i) {
      if (counts[i] < 0) throw UsageError("derivative counts must be nonnegative");
      max_counts[i] = std::max(max_counts[i], counts[i]);
    }
  }

  // Mixed-radix code for every sub-multiset that some target actually needs.
  std::vector<int> stride(nd, 1);
  long total = 1;
  for (int i = 0; i < nd; ++i) {
    stride[i] = static_cast<int>(total);
    total *= max_counts[i] + 1;
  }
  std::vector<char> needed(total, 0);
  needed[0] = 1;
  for (const auto& counts : targets) {
    std::vector<int> sub(nd, 0);
    while (true) {
      int code = 0;
      for (int i = 0; i < nd; ++i) code += sub[i] * stride[i];
      needed[code] = 1;
      int k = nd - 1;
      while (k >= 0 && sub[k] == counts[k]) sub[k--] = 0;
      if (k < 0) break;
      ++sub[k];
    }
  }
  std::vector<int> slot_of(total, -1);
  std::vector<std::vector<int>> multisets;
  for (long code = 0; code < total; ++code) {
    if (!needed[code]) continue;
    slot_of[code] = static_cast<int>(multisets.size());
    std::vector<int> ms;
    long rest = code;
    for (int i = nd - 1; i >= 0; --i) {
      const int c = static_cast<int>(rest / stride[i]);
      rest %= stride[i];
      ms.insert(ms.begin(), c, i);
    }
    multisets.push_back(std::move(ms));
  }

  std::vector<ThetaResult> sums = theta_multi(z, B, dirs, multisets, trunc);
  const ThetaResult& base = sums[slot_of[0]];
  if (std::abs(base.value) < trunc.divisor_floor * base.scale) {
    throw NearDivisorError("log derivative requested too close to the theta divisor "
                           "(|theta|/scale = " +
                           format_double(std::abs(base.value) / base.scale) + ")");
  }
  std::vector<cdouble> ratio(total, cdouble{0.0, 0.0});
  for (long code = 0; code < total; ++code) {
    if (slot_of[code] >= 0) ratio[code] = sums[slot_of[code]].value / base.value;
  }

  // Label each derivative as distinct slots and invert through the partition
  // lattice: each partition contributes
  //   (-1)^{blocks-1} (blocks-1)! * prod over blocks of d_block theta / theta.
  std::vector<cdouble> out(targets.size());
  for (size_t t = 0; t < targets.size(); ++t) {
    const auto& counts = targets[t];
    int order = 0;
    for (int c : counts) order += c;
    if (order == 0) {
      out[t] = std::log(base.value);
      continue;
    }
    std::vector<int> label(order);
    {
      int pos = 0;
      for (int i = 0; i < nd; ++i)
        for (int c = 0; c < counts[i]; ++c) label[pos++] = i;
    }
    cdouble acc{0.0, 0.0};
    for (const auto& partition : set_partitions(order)) {
      double coeff = 1.0;
      for (size_t b = 1; b < partition.size(); ++b) coeff *= -static_cast<double>(b);
      cdouble prod{coeff, 0.0};
      for (const auto& block : partition) {
        int code = 0;
        for (int elem : block) code += stride[label[elem]];
        prod *= ratio[code];
      }
      acc += prod;
    }
    out[t] = acc;
  }
  return out;
}

cdouble theta_log_deriv(const VectorXcd& z, const RiemannMatrix& B,
                        const std::vector<VectorXcd>& dirs, const std::vector<int>& counts,
                        const TruncationSpec& trunc) {
  return theta_log_deriv_batch(z, B, dirs, {counts}, trunc)[0];
}

}  // namespace schottky
