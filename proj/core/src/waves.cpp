#include "schottky/waves.hpp"

#include <algorithm>
#include <climits>
#include <sstream>

namespace schottky {

namespace {

int frame_jet_len(const PoleFrame& frame) {
  int len = INT_MAX;
  for (const TaylorJet& p : frame.poles) len = std::min(len, p.length());
  return frame.size() == 0 ? 1 : len;
}

}  // namespace

RationalFunction cm_u(const FramePtr& frame) {
  if (!frame || frame->size() == 0) throw UsageError("cm_u needs a nonempty frame");
  const int len = frame_jet_len(*frame);
  RationalFunction u{frame};
  for (int i = 0; i < frame->size(); ++i) {
    u.add_pole_term(i, 2, TaylorJet{cdouble{2.0, 0.0}, len});
  }
  return u;
}

RationalFunction wave_step(const RationalFunction& xi_s, const RationalFunction& u,
                           int next_index, double tol) {
  const RationalFunction rhs = xi_s.dy() + u * xi_s - xi_s.dx().dx();
  return 0.5 * rhs.antiderivative(tol, next_index);
}

WaveSeries wave_recursion(const FramePtr& frame, int steps, double tol) {
  if (!frame || frame->size() == 0) throw UsageError("wave recursion needs a nonempty frame");
  if (steps < 0) throw UsageError("wave recursion needs steps >= 0");
  const int len = frame_jet_len(*frame);
  if (len < steps + 2) {
    throw UsageError("wave recursion to depth " + std::to_string(steps) +
                     " needs frame jets of length >= " + std::to_string(steps + 2));
  }
  WaveSeries ws;
  ws.frame = frame;
  ws.u = cm_u(frame);
  ws.xi.push_back(RationalFunction::constant(frame, cdouble{1.0, 0.0}, len));
  for (int s = 1; s <= steps; ++s) {
    ws.xi.push_back(wave_step(ws.xi.back(), ws.u, s, tol));
  }
  return ws;
}

PsiDO wave_operator(const WaveSeries& ws) {
  const int len = frame_jet_len(*ws.frame);
  PsiDO phi = PsiDO::identity(ws.frame, len);
  for (int s = 1; s <= ws.steps(); ++s) {
    phi.set_coeff(-s, ws.xi[s]);
  }
  phi.mark_truncated(-ws.steps());
  return phi;
}

PsiDO lax_operator(const WaveSeries& ws, int depth) {
  const PsiDO phi = wave_operator(ws);
  const PsiDO dx = PsiDO::d(ws.frame, frame_jet_len(*ws.frame));
  return phi.compose(dx, depth).compose(phi.inverse(depth), depth);
}

std::vector<RationalFunction> f_residues(const PsiDO& lax, int m_max, int depth) {
  std::vector<RationalFunction> out;
  PsiDO lm = lax;
  for (int m = 1; m <= m_max; ++m) {
    out.push_back(lm.res());
    if (m < m_max) lm = lm.compose(lax, depth);
  }
  return out;
}

std::vector<RationalFunction> dual_pairing(const WaveSeries& ws, int s_max, int depth) {
  const PsiDO phi = wave_operator(ws);
  const PsiDO dual = phi.adjoint(depth).inverse(depth);
  std::vector<RationalFunction> j;
  for (int s = 0; s <= s_max; ++s) {
    RationalFunction acc{ws.frame};
    for (int a = 0; a <= std::min(s, ws.steps()); ++a) {
      const int b = s - a;
      const RationalFunction bb = dual.coeff(-b);
      const double sign = (b % 2 == 0) ? 1.0 : -1.0;
      if (a == 0) {
        acc += sign * bb;
      } else {
        acc += sign * (ws.xi[a] * bb);
      }
    }
    j.push_back(std::move(acc));
  }
  return j;
}

double dickey_defect(const PsiDO& p, const PsiDO& q, int depth) {
  RationalFunction lhs{p.frame()};
  for (int i = p.min_order(); i <= p.top(); ++i) {
    const int jo = -1 - i;
    if (jo < q.min_order() || jo > q.top()) continue;
    const RationalFunction pi = p.coeff(i);
    const RationalFunction qj = q.coeff(jo);
    if (pi.is_zero() || qj.is_zero()) continue;
    const double sign = (jo % 2 == 0) ? 1.0 : -1.0;
    lhs += sign * (pi * qj);
  }
  const RationalFunction rhs = p.compose(q.adjoint(depth), depth).res();
  return (lhs - rhs).magnitude();
}

double lax_defect(const WaveSeries& ws, int m, int depth) {
  const int len = frame_jet_len(*ws.frame);
  const PsiDO lax = lax_operator(ws, depth);
  const PsiDO lm = lax.power(m, depth);
  const PsiDO lm_plus = lm.plus_part();
  const PsiDO a = PsiDO::monomial(ws.u, 0) - PsiDO::d(ws.frame, len, 2);
  const PsiDO lhs = a.compose(lm_plus, depth) - lm_plus.compose(a, depth) + lm_plus.dy_coeffs();
  const PsiDO rhs = PsiDO::monomial(2.0 * lm.res().dx(), 0);
  return (lhs - rhs).magnitude();
}

std::string wave_dump(const WaveSeries& ws) {
  std::ostringstream os;
  os << "wave_series particles=" << ws.frame->size() << " steps=" << ws.steps() << '\n';
  os << "potential\n" << ws.u.to_text();
  for (int s = 0; s <= ws.steps(); ++s) {
    os << "xi " << s << '\n' << ws.xi[s].to_text();
  }
  return os.str();
}

}  // namespace schottky
