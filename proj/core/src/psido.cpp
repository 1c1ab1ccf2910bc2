#include "schottky/psido.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>

namespace schottky {

namespace {

constexpr int kNoFloor = INT_MIN / 4;  // "trusted arbitrarily deep"

// Generalized binomial C(i, m) for integer i of either sign; every
// intermediate is itself a binomial coefficient, hence exact in double.
double binom_gen(int i, int m) {
  double c = 1.0;
  for (int t = 0; t < m; ++t) {
    c = c * (i - t) / (t + 1);
    if (c == 0.0) break;
  }
  return c;
}

}  // namespace

PsiDO PsiDO::zero(FramePtr frame) {
  PsiDO p;
  p.frame_ = std::move(frame);
  return p;
}

PsiDO PsiDO::identity(FramePtr frame, int jet_len) {
  PsiDO p;
  p.frame_ = frame;
  p.terms_.emplace(0, RationalFunction::constant(frame, cdouble{1.0, 0.0}, jet_len));
  return p;
}

PsiDO PsiDO::d(FramePtr frame, int jet_len, int power) {
  PsiDO p;
  p.frame_ = frame;
  p.terms_.emplace(power, RationalFunction::constant(frame, cdouble{1.0, 0.0}, jet_len));
  return p;
}

PsiDO PsiDO::monomial(RationalFunction coeff, int order) {
  PsiDO p;
  p.frame_ = coeff.frame();
  if (!p.frame_) throw UsageError("monomial coefficient needs a frame");
  if (!coeff.is_zero()) p.terms_.emplace(order, std::move(coeff));
  return p;
}

void PsiDO::set_coeff(int order, RationalFunction f) {
  if (!frame_) frame_ = f.frame();
  if (f.frame().get() != frame_.get()) {
    const FrameMerge fm = FrameMerge::make(frame_, f.frame());
    *this = lifted(fm.merged, fm.map_a);
    terms_[order] = FrameMerge::lift(f, fm.merged, fm.map_b);
    return;
  }
  if (f.is_zero()) {
    terms_.erase(order);
  } else {
    terms_[order] = std::move(f);
  }
}

void PsiDO::mark_truncated(int floor) {
  exact_ = false;
  floor_ = floor;
  for (auto it = terms_.begin(); it != terms_.end();) {
    it = (it->first < floor) ? terms_.erase(it) : std::next(it);
  }
}

int PsiDO::top() const { return terms_.empty() ? floor_ : terms_.rbegin()->first; }

int PsiDO::min_order() const { return terms_.empty() ? 0 : terms_.begin()->first; }

RationalFunction PsiDO::coeff(int order) const {
  if (!frame_) throw UsageError("coefficient of an uninitialized operator");
  const auto it = terms_.find(order);
  if (it != terms_.end()) return it->second;
  if (!exact_ && order < floor_) {
    throw TruncationError("operator coefficient at order " + std::to_string(order) +
                          " lies below the trusted floor " + std::to_string(floor_) +
                          "; rebuild with depth >= " + std::to_string(top() - order));
  }
  return RationalFunction{frame_};
}

void PsiDO::add_term(int order, const RationalFunction& f) {
  if (f.is_zero()) return;
  auto it = terms_.find(order);
  if (it == terms_.end()) {
    terms_.emplace(order, f);
  } else {
    it->second += f;
  }
}

void PsiDO::enforce_window(int depth) {
  if (exact_) return;
  floor_ = std::max(floor_, top() - depth);
  for (auto it = terms_.begin(); it != terms_.end();) {
    it = (it->first < floor_) ? terms_.erase(it) : std::next(it);
  }
}

PsiDO PsiDO::lifted(const FramePtr& to, const std::vector<int>& map) const {
  PsiDO out;
  out.frame_ = to;
  out.floor_ = floor_;
  out.exact_ = exact_;
  for (const auto& [order, f] : terms_) {
    out.terms_.emplace(order, FrameMerge::lift(f, to, map));
  }
  return out;
}

void PsiDO::align(PsiDO& a, PsiDO& b) {
  if (!a.frame_ || !b.frame_) throw UsageError("arithmetic on an uninitialized operator");
  if (a.frame_.get() == b.frame_.get()) return;
  const FrameMerge fm = FrameMerge::make(a.frame_, b.frame_);
  a = a.lifted(fm.merged, fm.map_a);
  b = b.lifted(fm.merged, fm.map_b);
}

PsiDO PsiDO::compose(const PsiDO& o, int depth) const {
  PsiDO a = *this, b = o;
  align(a, b);
  PsiDO out;
  out.frame_ = a.frame_;
  if (a.terms_.empty() || b.terms_.empty()) {
    out.exact_ = a.exact_ && b.exact_;
    out.floor_ = out.exact_ ? 0 : std::max(a.floor_ + b.top(), a.top() + b.floor_);
    return out;
  }
  const int top_out = a.top() + b.top();
  out.exact_ = a.exact_ && b.exact_ && a.min_order() >= 0;
  int valid = kNoFloor;
  if (!a.exact_) valid = std::max(valid, a.floor_ + b.top());
  if (!b.exact_) valid = std::max(valid, a.top() + b.floor_);
  const int floor_out = out.exact_ ? kNoFloor : std::max(top_out - depth, valid);

  for (const auto& [j, bj] : b.terms_) {
    // x-derivatives of b_j, grown on demand
    std::vector<RationalFunction> ders{bj};
    for (const auto& [i, ai] : a.terms_) {
      const int m_cap = out.exact_ ? std::max(i, 0) : i + j - floor_out;
      for (int m = 0; m <= m_cap; ++m) {
        const double c = binom_gen(i, m);
        if (c == 0.0) break;
        while (static_cast<int>(ders.size()) <= m) ders.push_back(ders.back().dx());
        out.add_term(i + j - m, c * (ai * ders[m]));
      }
    }
  }
  if (!out.exact_) {
    out.floor_ = floor_out;
    out.enforce_window(depth);
  }
  return out;
}

PsiDO PsiDO::power(int m, int depth) const {
  if (m < 1) throw UsageError("operator power expects m >= 1");
  PsiDO acc = *this;
  for (int k = 1; k < m; ++k) acc = acc.compose(*this, depth);
  return acc;
}

PsiDO PsiDO::adjoint(int depth) const {
  if (!frame_) throw UsageError("adjoint of an uninitialized operator");
  PsiDO out;
  out.frame_ = frame_;
  out.exact_ = exact_ && min_order() >= 0;
  const int top_out = top();
  const int floor_out =
      out.exact_ ? kNoFloor : std::max(top_out - depth, exact_ ? kNoFloor : floor_);
  for (const auto& [j, aj] : terms_) {
    // (-d)^j composed with a_j from the left: sum_m C(j, m) a_j^(m) d^(j-m)
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    RationalFunction der = aj;
    const int m_cap = out.exact_ ? std::max(j, 0) : j - floor_out;
    for (int m = 0; m <= m_cap; ++m) {
      const double c = binom_gen(j, m);
      if (c == 0.0) break;
      if (m > 0) der = der.dx();
      out.add_term(j - m, (sign * c) * der);
    }
  }
  if (!out.exact_) {
    out.floor_ = floor_out;
    out.enforce_window(depth);
  }
  return out;
}

PsiDO PsiDO::inverse(int depth) const {
  if (!frame_) throw UsageError("inverse of an uninitialized operator");
  if (terms_.empty() || top() != 0) {
    throw UsageError("operator inverse needs top order 0");
  }
  const RationalFunction lead = coeff(0);
  double pole_mass = 0.0;
  for (int i = 0; i < frame_->size(); ++i) {
    for (int k = 1; k <= lead.pole_order(i); ++k) {
      pole_mass = std::max(pole_mass, lead.pole_coeff(i, k).magnitude());
    }
  }
  if (lead.poly_degree() > 0 || pole_mass > 1e-13 * std::max(1.0, lead.magnitude())) {
    throw UsageError("operator inverse needs an x-free leading coefficient");
  }
  const TaylorJet c = lead.poly_coeff(0);
  if (c.length() == 0 || std::abs(c.value()) == 0.0) {
    throw UsageError("operator inverse needs an invertible leading coefficient");
  }
  const TaylorJet cinv = c.reciprocal();

  PsiDO rest;  // -c^-1 (P - c): strictly negative orders
  rest.frame_ = frame_;
  rest.exact_ = exact_;
  rest.floor_ = floor_;
  for (const auto& [order, f] : terms_) {
    if (order < 0) rest.add_term(order, (-1.0) * (cinv * f));
  }

  PsiDO out = identity(frame_, c.length());
  PsiDO x = identity(frame_, c.length());
  const int floor_out = std::max(-depth, exact_ ? -depth : floor_);
  for (int k = 1; k <= depth; ++k) {
    x = x.compose(rest, depth);
    if (x.terms_.empty() || x.top() < floor_out) break;
    for (const auto& [order, f] : x.terms_) out.add_term(order, f);
  }
  // right factor c^-1 commutes with d because it is x-free
  PsiDO scaled;
  scaled.frame_ = frame_;
  scaled.exact_ = false;
  scaled.floor_ = floor_out;
  for (const auto& [order, f] : out.terms_) {
    if (order >= floor_out) scaled.add_term(order, cinv * f);
  }
  return scaled;
}

PsiDO PsiDO::plus_part() const {
  if (!frame_) throw UsageError("plus part of an uninitialized operator");
  if (!exact_ && floor_ > 0) {
    throw TruncationError("plus part unavailable: coefficients below order " +
                          std::to_string(floor_) + " were truncated");
  }
  PsiDO out;
  out.frame_ = frame_;
  for (const auto& [order, f] : terms_) {
    if (order >= 0) out.terms_.emplace(order, f);
  }
  return out;
}

RationalFunction PsiDO::res() const { return coeff(-1); }

PsiDO PsiDO::dy_coeffs() const {
  PsiDO out;
  out.frame_ = frame_;
  out.exact_ = exact_;
  out.floor_ = floor_;
  for (const auto& [order, f] : terms_) {
    RationalFunction df = f.dy();
    if (!df.is_zero()) out.terms_.emplace(order, std::move(df));
  }
  return out;
}

RationalFunction PsiDO::apply(const RationalFunction& f) const {
  if (!frame_) throw UsageError("applying an uninitialized operator");
  if (min_order() < 0) throw UsageError("only differential operators act on functions here");
  RationalFunction out{frame_};
  RationalFunction der = f;
  int at = 0;
  for (const auto& [order, a] : terms_) {
    while (at < order) {
      der = der.dx();
      ++at;
    }
    out += a * der;
  }
  return out;
}

PsiDO PsiDO::operator-() const {
  PsiDO out = *this;
  for (auto& [order, f] : out.terms_) f = (-1.0) * f;
  return out;
}

PsiDO operator+(const PsiDO& a, const PsiDO& b) {
  PsiDO x = a, y = b;
  PsiDO::align(x, y);
  PsiDO out = x;
  out.exact_ = x.exact_ && y.exact_;
  if (!out.exact_) {
    out.floor_ = std::max(x.exact_ ? kNoFloor : x.floor_, y.exact_ ? kNoFloor : y.floor_);
    for (auto it = out.terms_.begin(); it != out.terms_.end();) {
      it = (it->first < out.floor_) ? out.terms_.erase(it) : std::next(it);
    }
  }
  for (const auto& [order, f] : y.terms_) {
    if (out.exact_ || order >= out.floor_) out.add_term(order, f);
  }
  return out;
}

PsiDO operator-(const PsiDO& a, const PsiDO& b) { return a + (-b); }

PsiDO operator*(cdouble s, const PsiDO& a) {
  PsiDO out = a;
  for (auto& [order, f] : out.terms_) f = s * f;
  return out;
}

PsiDO operator*(const TaylorJet& s, const PsiDO& a) {
  PsiDO out = a;
  for (auto& [order, f] : out.terms_) f = s * f;
  return out;
}

double PsiDO::magnitude() const {
  double m = 0.0;
  for (const auto& [order, f] : terms_) m = std::max(m, f.magnitude());
  return m;
}

std::string PsiDO::to_text() const {
  std::ostringstream os;
  os << "psido top=" << top() << " floor=";
  if (exact_) {
    os << "exact";
  } else {
    os << floor_;
  }
  os << '\n';
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    os << "order " << it->first << '\n' << it->second.to_text();
  }
  return os.str();
}

}  // namespace schottky
