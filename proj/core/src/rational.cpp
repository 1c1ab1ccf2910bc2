#include "schottky/rational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace schottky {

namespace {

// Structural-zero-aware jet helpers: a default-constructed (length-zero) jet
// stands for an exactly absent term and must not clamp the length of real
// operands the way a stored zero of finite length would.
bool jz_zero(const TaylorJet& j) { return j.length() == 0; }

TaylorJet jz_add(const TaylorJet& a, const TaylorJet& b) {
  if (jz_zero(a)) return b;
  if (jz_zero(b)) return a;
  return a + b;
}

TaylorJet jz_mul(const TaylorJet& a, const TaylorJet& b) {
  if (jz_zero(a) || jz_zero(b)) return TaylorJet{};
  return a * b;
}

TaylorJet jz_scale(const TaylorJet& a, cdouble s) {
  if (jz_zero(a)) return TaylorJet{};
  return a * s;
}

// C(n, r) by the multiplicative recurrence; every intermediate value is a
// binomial coefficient, so the result is exact in double for the orders here.
double binom(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  r = std::min(r, n - r);
  double c = 1.0;
  for (int t = 1; t <= r; ++t) c = c * (n - r + t) / t;
  return c;
}

double jet_distance(const TaylorJet& a, const TaylorJet& b) {
  const int len = std::min(a.length(), b.length());
  double d = 0.0;
  for (int k = 0; k < len; ++k) d = std::max(d, std::abs(a.coeff(k) - b.coeff(k)));
  return d;
}

void check_separation(const std::vector<TaylorJet>& poles, double rel_floor,
                      const char* what) {
  double scale = 1.0;
  for (const TaylorJet& p : poles) scale = std::max(scale, std::abs(p.value()));
  for (size_t i = 0; i < poles.size(); ++i) {
    for (size_t j = i + 1; j < poles.size(); ++j) {
      if (std::abs(poles[i].value() - poles[j].value()) < rel_floor * scale) {
        throw DegeneracyError(std::string(what) + ": poles " + std::to_string(i) +
                              " and " + std::to_string(j) + " are too close");
      }
    }
  }
}

}  // namespace

double PoleFrame::scale() const {
  double s = 1.0;
  for (const TaylorJet& p : poles) s = std::max(s, std::abs(p.value()));
  return s;
}

FramePtr make_frame(std::vector<TaylorJet> poles) {
  for (const TaylorJet& p : poles) {
    if (p.length() == 0) throw UsageError("frame poles need at least one jet coefficient");
  }
  check_separation(poles, 1e-10, "make_frame");
  auto f = std::make_shared<PoleFrame>();
  f->poles = std::move(poles);
  return f;
}

FramePtr make_static_frame(const std::vector<cdouble>& positions, int jet_len) {
  std::vector<TaylorJet> poles;
  poles.reserve(positions.size());
  for (cdouble x : positions) poles.emplace_back(x, jet_len);
  return make_frame(std::move(poles));
}

FramePtr make_cm_frame(const std::vector<cdouble>& positions,
                       const std::vector<cdouble>& momenta, int jet_len) {
  const int n = static_cast<int>(positions.size());
  if (momenta.size() != positions.size()) {
    throw UsageError("make_cm_frame: positions and momenta differ in length");
  }
  if (jet_len < 2) throw UsageError("make_cm_frame: need jet length >= 2");

  double scale = 1.0;
  for (cdouble x : positions) scale = std::max(scale, std::abs(x));
  std::vector<std::pair<int, int>> close;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(positions[i] - positions[j]) < 1e-7 * scale) close.emplace_back(i, j);
    }
  }
  if (!close.empty()) throw CollisionError("make_cm_frame: initial collision", 0.0, close);

  std::vector<std::vector<cdouble>> c(n, std::vector<cdouble>(jet_len, cdouble{0.0, 0.0}));
  for (int i = 0; i < n; ++i) {
    c[i][0] = positions[i];
    if (jet_len > 1) c[i][1] = momenta[i];
  }
  // Order k of the acceleration -8 sum (p_i - p_j)^-3 only involves position
  // coefficients through order k, so each pass determines coefficient k + 2.
  for (int k = 0; k + 2 < jet_len; ++k) {
    std::vector<TaylorJet> p;
    p.reserve(n);
    for (int i = 0; i < n; ++i) p.push_back(TaylorJet::from_coeffs(c[i]));
    for (int i = 0; i < n; ++i) {
      TaylorJet acc{cdouble{0.0, 0.0}, jet_len};
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += (p[i] - p[j]).pow_int(-3);
      }
      c[i][k + 2] = -8.0 * acc.coeff(k) / static_cast<double>((k + 1) * (k + 2));
    }
  }
  std::vector<TaylorJet> poles;
  poles.reserve(n);
  for (int i = 0; i < n; ++i) poles.push_back(TaylorJet::from_coeffs(std::move(c[i])));
  return make_frame(std::move(poles));
}

RationalFunction::RationalFunction(FramePtr frame) : frame_(std::move(frame)) {
  if (!frame_) throw UsageError("rational function needs a frame");
  pole_.resize(frame_->size());
}

RationalFunction RationalFunction::constant(FramePtr frame, cdouble c, int jet_len) {
  return constant(std::move(frame), TaylorJet{c, jet_len});
}

RationalFunction RationalFunction::constant(FramePtr frame, TaylorJet c) {
  RationalFunction f{std::move(frame)};
  f.poly_.push_back(std::move(c));
  return f;
}

void RationalFunction::add_pole_term(int pole, int order, const TaylorJet& coeff) {
  if (pole < 0 || pole >= frame_->size()) throw UsageError("pole index out of range");
  if (order < 1) throw UsageError("pole order must be >= 1");
  if (jz_zero(coeff)) return;
  auto& slots = pole_[pole];
  if (static_cast<int>(slots.size()) < order) slots.resize(order);
  slots[order - 1] = jz_add(slots[order - 1], coeff);
}

void RationalFunction::add_poly_term(int degree, const TaylorJet& coeff) {
  if (degree < 0) throw UsageError("polynomial degree must be >= 0");
  if (jz_zero(coeff)) return;
  if (static_cast<int>(poly_.size()) <= degree) poly_.resize(degree + 1);
  poly_[degree] = jz_add(poly_[degree], coeff);
}

bool RationalFunction::is_zero() const {
  for (const auto& slots : pole_) {
    for (const auto& j : slots) {
      if (!jz_zero(j)) return false;
    }
  }
  for (const auto& j : poly_) {
    if (!jz_zero(j)) return false;
  }
  return true;
}

TaylorJet RationalFunction::pole_coeff(int pole, int order) const {
  if (pole < 0 || pole >= frame_->size()) throw UsageError("pole index out of range");
  if (order < 1 || order > static_cast<int>(pole_[pole].size())) return TaylorJet{};
  return pole_[pole][order - 1];
}

TaylorJet RationalFunction::poly_coeff(int degree) const {
  if (degree < 0 || degree >= static_cast<int>(poly_.size())) return TaylorJet{};
  return poly_[degree];
}

int RationalFunction::poly_degree() const {
  // A slot filled with exact zeros (a derivative of a constant, say) is not
  // part of the polynomial any more than an absent one.
  for (int m = static_cast<int>(poly_.size()) - 1; m >= 0; --m) {
    if (!jz_zero(poly_[m]) && poly_[m].magnitude() > 0.0) return m;
  }
  return -1;
}

int RationalFunction::pole_order(int pole) const {
  if (pole < 0 || pole >= frame_->size()) throw UsageError("pole index out of range");
  for (int k = static_cast<int>(pole_[pole].size()); k >= 1; --k) {
    if (!jz_zero(pole_[pole][k - 1]) && pole_[pole][k - 1].magnitude() > 0.0) return k;
  }
  return 0;
}

TaylorJet RationalFunction::laurent_at(int pole, int k) const {
  if (pole < 0 || pole >= frame_->size()) throw UsageError("pole index out of range");
  if (k < 0) return pole_coeff(pole, -k);

  const TaylorJet& p = frame_->poles[pole];
  TaylorJet acc;
  // Polynomial part recentered: coefficient of (x-p)^k in sum c_m x^m.
  for (int m = k; m < static_cast<int>(poly_.size()); ++m) {
    if (jz_zero(poly_[m])) continue;
    TaylorJet term = jz_scale(poly_[m], binom(m, k));
    for (int t = 0; t < m - k; ++t) term = term * p;
    acc = jz_add(acc, term);
  }
  // Regular expansions of the other poles: d^k/dx^k (x-q)^-l picks up
  // (-1)^k C(l+k-1, k) (p-q)^-(l+k).
  for (int j = 0; j < frame_->size(); ++j) {
    if (j == pole || pole_[j].empty()) continue;
    TaylorJet dinv = (p - frame_->poles[j]).reciprocal();
    TaylorJet dpow = dinv;
    for (int t = 1; t < k + 1; ++t) dpow = dpow * dinv;  // dinv^(k+1) after loop
    for (int l = 1; l <= static_cast<int>(pole_[j].size()); ++l) {
      // dpow holds dinv^(l+k) at the top of each iteration
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      acc = jz_add(acc, jz_scale(jz_mul(pole_[j][l - 1], dpow), sign * binom(l + k - 1, k)));
      dpow = dpow * dinv;
    }
  }
  return acc;
}

std::vector<TaylorJet> RationalFunction::residues() const {
  std::vector<TaylorJet> r(frame_->size());
  for (int i = 0; i < frame_->size(); ++i) r[i] = pole_coeff(i, 1);
  return r;
}

double RationalFunction::magnitude() const {
  double m = 0.0;
  for (const auto& slots : pole_) {
    for (const auto& j : slots) m = std::max(m, j.magnitude());
  }
  for (const auto& j : poly_) m = std::max(m, j.magnitude());
  return m;
}

int RationalFunction::max_pole_order(double rel_floor) const {
  const double floor = rel_floor * magnitude();
  int order = 0;
  for (const auto& slots : pole_) {
    for (int k = static_cast<int>(slots.size()); k > order; --k) {
      if (slots[k - 1].magnitude() > floor) {
        order = k;
        break;
      }
    }
  }
  return order;
}

cdouble RationalFunction::eval(cdouble x) const {
  cdouble acc{0.0, 0.0};
  for (int m = static_cast<int>(poly_.size()) - 1; m >= 0; --m) {
    acc = acc * x + (jz_zero(poly_[m]) ? cdouble{0.0, 0.0} : poly_[m].value());
  }
  for (int i = 0; i < frame_->size(); ++i) {
    if (pole_[i].empty()) continue;
    const cdouble dinv = 1.0 / (x - frame_->poles[i].value());
    cdouble dpow = dinv;
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      if (!jz_zero(pole_[i][k - 1])) acc += pole_[i][k - 1].value() * dpow;
      dpow *= dinv;
    }
  }
  return acc;
}

TaylorJet RationalFunction::eval_jet(cdouble x) const {
  TaylorJet acc;
  for (int m = 0; m < static_cast<int>(poly_.size()); ++m) {
    acc = jz_add(acc, jz_scale(poly_[m], std::pow(x, m)));
  }
  for (int i = 0; i < frame_->size(); ++i) {
    if (pole_[i].empty()) continue;
    const TaylorJet dinv = (-(frame_->poles[i]) + x).reciprocal();  // 1/(x - p_i(y))
    TaylorJet dpow = dinv;
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      acc = jz_add(acc, jz_mul(pole_[i][k - 1], dpow));
      dpow = dpow * dinv;
    }
  }
  if (jz_zero(acc)) return TaylorJet{cdouble{0.0, 0.0}, 1};
  return acc;
}

RationalFunction RationalFunction::dx() const {
  RationalFunction out{frame_};
  for (int i = 0; i < frame_->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      const TaylorJet& a = pole_[i][k - 1];
      if (jz_zero(a)) continue;
      out.add_pole_term(i, k + 1, jz_scale(a, -static_cast<double>(k)));
    }
  }
  for (int m = 1; m < static_cast<int>(poly_.size()); ++m) {
    out.add_poly_term(m - 1, jz_scale(poly_[m], static_cast<double>(m)));
  }
  return out;
}

RationalFunction RationalFunction::dy() const {
  RationalFunction out{frame_};
  for (int i = 0; i < frame_->size(); ++i) {
    if (pole_[i].empty()) continue;
    const TaylorJet pdot = frame_->poles[i].derivative();
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      const TaylorJet& a = pole_[i][k - 1];
      if (jz_zero(a)) continue;
      // d/dy [a (x-p)^-k] = a' (x-p)^-k + k a p' (x-p)^-(k+1)
      out.add_pole_term(i, k, a.derivative());
      out.add_pole_term(i, k + 1, jz_scale(a * pdot, static_cast<double>(k)));
    }
  }
  for (int m = 0; m < static_cast<int>(poly_.size()); ++m) {
    if (!jz_zero(poly_[m])) out.add_poly_term(m, poly_[m].derivative());
  }
  return out;
}

RationalFunction RationalFunction::antiderivative(double tol, int step_label) const {
  const double floor = tol * std::max(1.0, magnitude());
  bool obstructed = false;
  std::vector<cdouble> res_values(frame_->size(), cdouble{0.0, 0.0});
  std::vector<double> res_strengths(frame_->size(), 0.0);
  for (int i = 0; i < frame_->size(); ++i) {
    const TaylorJet r = pole_coeff(i, 1);
    if (jz_zero(r)) continue;
    res_values[i] = r.value();
    res_strengths[i] = r.magnitude();
    if (r.magnitude() > floor) obstructed = true;
  }
  if (obstructed) {
    throw ObstructionError("antiderivative: simple-pole residues survive", step_label,
                           std::move(res_values), std::move(res_strengths));
  }
  RationalFunction out{frame_};
  for (int i = 0; i < frame_->size(); ++i) {
    // order-1 coefficients below the obstruction floor are cancellation
    // debris; integrating past them drops an O(floor) logarithm
    for (int k = 2; k <= static_cast<int>(pole_[i].size()); ++k) {
      const TaylorJet& a = pole_[i][k - 1];
      if (jz_zero(a)) continue;
      out.add_pole_term(i, k - 1, jz_scale(a, -1.0 / static_cast<double>(k - 1)));
    }
  }
  for (int m = 0; m < static_cast<int>(poly_.size()); ++m) {
    if (!jz_zero(poly_[m])) {
      out.add_poly_term(m + 1, jz_scale(poly_[m], 1.0 / static_cast<double>(m + 1)));
    }
  }
  return out;
}

RationalFunction RationalFunction::operator-() const {
  RationalFunction out{frame_};
  for (int i = 0; i < frame_->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      out.add_pole_term(i, k, jz_scale(pole_[i][k - 1], -1.0));
    }
  }
  for (int m = 0; m < static_cast<int>(poly_.size()); ++m) {
    out.add_poly_term(m, jz_scale(poly_[m], -1.0));
  }
  return out;
}

RationalFunction& RationalFunction::operator+=(const RationalFunction& o) {
  *this = *this + o;
  return *this;
}

RationalFunction& RationalFunction::operator-=(const RationalFunction& o) {
  *this = *this - o;
  return *this;
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
  if (!a.frame_ || !b.frame_) throw UsageError("arithmetic on an uninitialized rational function");
  if (a.frame_.get() != b.frame_.get()) {
    const FrameMerge fm = FrameMerge::make(a.frame_, b.frame_);
    return FrameMerge::lift(a, fm.merged, fm.map_a) + FrameMerge::lift(b, fm.merged, fm.map_b);
  }
  RationalFunction out = a;
  for (int i = 0; i < b.frame_->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(b.pole_[i].size()); ++k) {
      out.add_pole_term(i, k, b.pole_[i][k - 1]);
    }
  }
  for (int m = 0; m < static_cast<int>(b.poly_.size()); ++m) {
    out.add_poly_term(m, b.poly_[m]);
  }
  return out;
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
  return a + (-b);
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
  if (!a.frame_ || !b.frame_) throw UsageError("arithmetic on an uninitialized rational function");
  if (a.frame_.get() != b.frame_.get()) {
    const FrameMerge fm = FrameMerge::make(a.frame_, b.frame_);
    return FrameMerge::lift(a, fm.merged, fm.map_a) * FrameMerge::lift(b, fm.merged, fm.map_b);
  }
  const FramePtr& frame = a.frame_;
  RationalFunction out{frame};

  // polynomial x polynomial
  for (int s = 0; s < static_cast<int>(a.poly_.size()); ++s) {
    if (jz_zero(a.poly_[s])) continue;
    for (int t = 0; t < static_cast<int>(b.poly_.size()); ++t) {
      out.add_poly_term(s + t, jz_mul(a.poly_[s], b.poly_[t]));
    }
  }

  // polynomial x pole term: recenter the polynomial at the pole, split the
  // resulting powers of (x-p) into a singular part and a shifted-back
  // polynomial remainder
  auto poly_times_pole = [&](const std::vector<TaylorJet>& poly, int pole, int k,
                             const TaylorJet& b_coeff) {
    const TaylorJet& p = frame->poles[pole];
    const int deg = static_cast<int>(poly.size()) - 1;
    std::vector<TaylorJet> ppow(deg + 1);
    if (deg >= 0) ppow[0] = TaylorJet{cdouble{1.0, 0.0}, p.length()};
    for (int t = 1; t <= deg; ++t) ppow[t] = ppow[t - 1] * p;
    for (int s = 0; s <= deg; ++s) {
      TaylorJet q;  // coefficient of (x-p)^s in the polynomial
      for (int m = s; m <= deg; ++m) {
        q = jz_add(q, jz_scale(jz_mul(poly[m], ppow[m - s]), binom(m, s)));
      }
      q = jz_mul(q, b_coeff);
      if (jz_zero(q)) continue;
      if (s < k) {
        out.add_pole_term(pole, k - s, q);
      } else {
        const int t = s - k;  // (x-p)^t back to powers of x
        for (int r = 0; r <= t; ++r) {
          const double sign = ((t - r) % 2 == 0) ? 1.0 : -1.0;
          out.add_poly_term(r, jz_scale(jz_mul(q, ppow[t - r]), sign * binom(t, r)));
        }
      }
    }
  };
  for (int j = 0; j < frame->size(); ++j) {
    for (int k = 1; k <= static_cast<int>(b.pole_[j].size()); ++k) {
      if (!jz_zero(b.pole_[j][k - 1]) && !a.poly_.empty()) {
        poly_times_pole(a.poly_, j, k, b.pole_[j][k - 1]);
      }
    }
    for (int k = 1; k <= static_cast<int>(a.pole_[j].size()); ++k) {
      if (!jz_zero(a.pole_[j][k - 1]) && !b.poly_.empty()) {
        poly_times_pole(b.poly_, j, k, a.pole_[j][k - 1]);
      }
    }
  }

  // pole x pole
  for (int i = 0; i < frame->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(a.pole_[i].size()); ++k) {
      const TaylorJet& ca = a.pole_[i][k - 1];
      if (jz_zero(ca)) continue;
      for (int j = 0; j < frame->size(); ++j) {
        for (int l = 1; l <= static_cast<int>(b.pole_[j].size()); ++l) {
          const TaylorJet& cb = b.pole_[j][l - 1];
          if (jz_zero(cb)) continue;
          const TaylorJet ab = ca * cb;
          if (i == j) {
            out.add_pole_term(i, k + l, ab);
            continue;
          }
          // (x-p)^-k (x-q)^-l in partial fractions; d = p - q
          const TaylorJet dinv = (frame->poles[i] - frame->poles[j]).reciprocal();
          std::vector<TaylorJet> dpow(k + l + 1);
          dpow[0] = TaylorJet{cdouble{1.0, 0.0}, dinv.length()};
          for (int t = 1; t <= k + l; ++t) dpow[t] = dpow[t - 1] * dinv;
          for (int m = 1; m <= k; ++m) {
            const double sign = ((k - m) % 2 == 0) ? 1.0 : -1.0;
            out.add_pole_term(i, m,
                              jz_scale(ab * dpow[l + k - m], sign * binom(l + k - m - 1, k - m)));
          }
          for (int m = 1; m <= l; ++m) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            out.add_pole_term(j, m,
                              jz_scale(ab * dpow[k + l - m], sign * binom(k + l - m - 1, l - m)));
          }
        }
      }
    }
  }
  return out;
}

RationalFunction operator*(cdouble s, const RationalFunction& a) {
  RationalFunction out{a.frame_};
  for (int i = 0; i < a.frame_->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(a.pole_[i].size()); ++k) {
      out.add_pole_term(i, k, jz_scale(a.pole_[i][k - 1], s));
    }
  }
  for (int m = 0; m < static_cast<int>(a.poly_.size()); ++m) {
    out.add_poly_term(m, jz_scale(a.poly_[m], s));
  }
  return out;
}

RationalFunction operator*(const RationalFunction& a, cdouble s) { return s * a; }

RationalFunction operator*(const TaylorJet& s, const RationalFunction& a) {
  RationalFunction out{a.frame_};
  for (int i = 0; i < a.frame_->size(); ++i) {
    for (int k = 1; k <= static_cast<int>(a.pole_[i].size()); ++k) {
      out.add_pole_term(i, k, jz_mul(s, a.pole_[i][k - 1]));
    }
  }
  for (int m = 0; m < static_cast<int>(a.poly_.size()); ++m) {
    out.add_poly_term(m, jz_mul(s, a.poly_[m]));
  }
  return out;
}

std::string RationalFunction::to_text() const {
  std::ostringstream os;
  auto put_jet = [&os](const TaylorJet& j) {
    os << j.length();
    for (int k = 0; k < j.length(); ++k) {
      os << ' ' << format_complex(j.coeff(k));
    }
    os << '\n';
  };
  os << "rational poles=" << frame_->size() << " poly_degree=" << poly_degree() << '\n';
  for (int i = 0; i < frame_->size(); ++i) {
    os << "pole " << i << " path ";
    put_jet(frame_->poles[i]);
    for (int k = 1; k <= static_cast<int>(pole_[i].size()); ++k) {
      if (jz_zero(pole_[i][k - 1])) continue;
      os << "  coeff order " << k << ' ';
      put_jet(pole_[i][k - 1]);
    }
  }
  for (int m = 0; m < static_cast<int>(poly_.size()); ++m) {
    if (jz_zero(poly_[m])) continue;
    os << "poly degree " << m << ' ';
    put_jet(poly_[m]);
  }
  return os.str();
}

FrameMerge FrameMerge::make(const FramePtr& a, const FramePtr& b) {
  FrameMerge fm;
  if (a.get() == b.get()) {
    fm.merged = a;
    fm.map_a.resize(a->size());
    fm.map_b.resize(a->size());
    for (int i = 0; i < a->size(); ++i) fm.map_a[i] = fm.map_b[i] = i;
    return fm;
  }
  const double scale = std::max(a->scale(), b->scale());
  std::vector<TaylorJet> poles = a->poles;
  fm.map_a.resize(a->size());
  for (int i = 0; i < a->size(); ++i) fm.map_a[i] = i;
  fm.map_b.resize(b->size());
  for (int j = 0; j < b->size(); ++j) {
    int hit = -1;
    for (int i = 0; i < static_cast<int>(poles.size()); ++i) {
      if (jet_distance(b->poles[j], poles[i]) <= 1e-12 * scale) {
        hit = i;
        break;
      }
    }
    if (hit < 0) {
      hit = static_cast<int>(poles.size());
      poles.push_back(b->poles[j]);
    }
    fm.map_b[j] = hit;
  }
  check_separation(poles, 1e-9, "frame merge");
  auto f = std::make_shared<PoleFrame>();
  f->poles = std::move(poles);
  fm.merged = std::move(f);
  return fm;
}

RationalFunction FrameMerge::lift(const RationalFunction& f, const FramePtr& to,
                                  const std::vector<int>& map) {
  RationalFunction out{to};
  for (int i = 0; i < static_cast<int>(map.size()); ++i) {
    for (int k = 1; k <= static_cast<int>(f.pole_[i].size()); ++k) {
      out.add_pole_term(map[i], k, f.pole_[i][k - 1]);
    }
  }
  for (int m = 0; m < static_cast<int>(f.poly_.size()); ++m) {
    out.add_poly_term(m, f.poly_[m]);
  }
  return out;
}

}  // namespace schottky
