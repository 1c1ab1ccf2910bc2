#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "schottky/cm.hpp"
#include "schottky/curves.hpp"
#include "schottky/psido.hpp"
#include "schottky/rational.hpp"
#include "schottky/theta.hpp"

using namespace schottky;

namespace {

RiemannMatrix bench_matrix(int g) {
  MatrixXcd M = MatrixXcd::Zero(g, g);
  for (int i = 0; i < g; ++i) {
    M(i, i) = cdouble(0.1 * (i + 1), 1.0 + 0.2 * i);
    for (int j = i + 1; j < g; ++j) {
      M(i, j) = M(j, i) = cdouble(0.02 * (i + j + 1), 0.05);
    }
  }
  return RiemannMatrix(M);
}

VectorXcd bench_point(int g) {
  VectorXcd z(g);
  for (int i = 0; i < g; ++i) z[i] = cdouble(0.21 + 0.05 * i, 0.13 - 0.03 * i);
  return z;
}

void theta_eval(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  const RiemannMatrix B = bench_matrix(g);
  const VectorXcd z = bench_point(g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(theta(z, B));
  }
}
BENCHMARK(theta_eval)->Arg(1)->Arg(2)->Arg(3)->Arg(4);

void theta_fourth_derivative(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  const RiemannMatrix B = bench_matrix(g);
  const VectorXcd z = bench_point(g);
  const std::vector<VectorXcd> dirs(4, VectorXcd::Ones(g));
  for (auto _ : state) {
    benchmark::DoNotOptimize(theta_deriv(z, B, dirs));
  }
}
BENCHMARK(theta_fourth_derivative)->Arg(2)->Arg(3);

void theta_multi_batch(benchmark::State& state) {
  const int g = 2;
  const RiemannMatrix B = bench_matrix(g);
  const VectorXcd z = bench_point(g);
  std::vector<VectorXcd> dirs{VectorXcd::Ones(g), bench_point(g)};
  const std::vector<std::vector<int>> msets{{}, {0}, {0, 0}, {0, 0, 0, 0}, {1, 1}, {0, 1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(theta_multi(z, B, dirs, msets));
  }
}
BENCHMARK(theta_multi_batch);

void psido_compose(benchmark::State& state) {
  const FramePtr frame =
      make_static_frame({{0.0, 0.9}, {1.1, -0.2}, {-1.0, 0.1}}, 6);
  const auto jet = [](double a) {
    return TaylorJet::from_coeffs({{a, 0.3}, {0.1, -a}, {a, a}, {0.2, 0.1}, {-0.3, a}, {a, 0.0}});
  };
  PsiDO P = PsiDO::zero(frame);
  PsiDO Q = PsiDO::zero(frame);
  for (int o = 1; o >= -3; --o) {
    RationalFunction f{frame};
    RationalFunction h{frame};
    for (int i = 0; i < frame->size(); ++i) {
      f.add_pole_term(i, 1, jet(0.3 + 0.1 * i + 0.01 * o));
      h.add_pole_term(i, 2, jet(0.2 - 0.1 * i + 0.01 * o));
    }
    P.set_coeff(o, f);
    Q.set_coeff(o, h);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(P.compose(Q, 12));
  }
}
BENCHMARK(psido_compose);

void cm_integrate_window(benchmark::State& state) {
  CMState s;
  s.x = {{0.0, 0.9}, {1.1, -0.2}, {-1.0, 0.1}, {0.4, 1.3}};
  s.p = {{0.2, 0.1}, {-0.3, 0.05}, {0.1, -0.2}, {0.0, 0.15}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cm_integrate(s, 1.0));
  }
}
BENCHMARK(cm_integrate_window);

void hyperelliptic_period_matrix(benchmark::State& state) {
  HyperellipticCurve curve;
  curve.branch_points = {{-2.0, 0.0}, {-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(hyperelliptic_periods(curve));
  }
}
BENCHMARK(hyperelliptic_period_matrix);

}  // namespace

BENCHMARK_MAIN();
