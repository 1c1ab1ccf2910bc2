#pragma once

#include <string>
#include <vector>

#include "schottky/psido.hpp"

namespace schottky {

// Output of the formal wave recursion 2 xi_{s+1}' = dy xi_s + u xi_s - xi_s''
// over a pole frame: xi[0] = 1 and xi[s] collects the k^-s coefficient of the
// wave series.  u is the potential the recursion ran against.
struct WaveSeries {
  FramePtr frame;
  std::vector<RationalFunction> xi;
  RationalFunction u;

  int steps() const { return static_cast<int>(xi.size()) - 1; }
};

// u = 2 sum_i (x - p_i)^-2, the potential carried by the pole frame.
RationalFunction cm_u(const FramePtr& frame);

// One recursion step from xi_s to xi_{s+1}.  A surviving simple-pole residue
// on the right-hand side means no rational antiderivative exists; the
// ObstructionError then carries next_index and the per-pole residues.
RationalFunction wave_step(const RationalFunction& xi_s, const RationalFunction& u,
                           int next_index, double tol = 1e-12);

// Runs the recursion for the given number of steps.  The frame jets must be
// at least steps + 2 long: each step consumes one y-order and downstream
// commutator checks need one more.
WaveSeries wave_recursion(const FramePtr& frame, int steps, double tol = 1e-12);

// Phi = 1 + sum_s xi_s d^-s, trusted down to order -steps.
PsiDO wave_operator(const WaveSeries& ws);

// L = Phi d Phi^-1, trusted down to order 1 - steps.
PsiDO lax_operator(const WaveSeries& ws, int depth = PsiDO::kDefaultDepth);

// F_m = res L^m for m = 1..m_max (stored at index m-1).
std::vector<RationalFunction> f_residues(const PsiDO& lax, int m_max,
                                         int depth = PsiDO::kDefaultDepth);

// Pairing of the wave series with its dual: J_s = sum_{a+b=s} (-1)^b xi_a b_b
// with b_b the d^-b coefficient of (Phi*)^-1.  Returns J_0..J_smax.
std::vector<RationalFunction> dual_pairing(const WaveSeries& ws, int s_max,
                                           int depth = PsiDO::kDefaultDepth);

// Residue pairing defect: max coefficient magnitude of
// res(P Q*) - sum_{i+j=-1} (-1)^j p_i q_j, which vanishes identically.
double dickey_defect(const PsiDO& p, const PsiDO& q, int depth = PsiDO::kDefaultDepth);

// Hierarchy-flow defect: max coefficient magnitude of
// [d_y - d^2 + u, L^m_+] - 2 (F_m)_x.
double lax_defect(const WaveSeries& ws, int m, int depth = PsiDO::kDefaultDepth);

// Deterministic full-precision dump for golden-file comparisons.
std::string wave_dump(const WaveSeries& ws);

}  // namespace schottky
