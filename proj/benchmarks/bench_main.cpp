#include <benchmark/benchmark.h>

#include "ldsid/dynamics.hpp"
#include "ldsid/estimators.hpp"
#include "ldsid/geometry.hpp"

namespace {

using namespace ldsid;

void BM_Simulate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LdsModel model(random_stable_matrix(n, 0.7, std::nullopt, 1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(model, NoiseSpec{}, 1000, seed++));
  }
}
BENCHMARK(BM_Simulate)->Arg(5)->Arg(15)->Arg(30);

void BM_StabilityParam(benchmark::State& state) {
  const Eigen::MatrixXd A =
      random_stable_matrix(static_cast<int>(state.range(0)), 0.9, std::nullopt, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stability_param_J(A, 1e-10));
  }
}
BENCHMARK(BM_StabilityParam)->Arg(5)->Arg(15);

void BM_Ols(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LdsModel model(random_stable_matrix(n, 0.7, std::nullopt, 3));
  const Trajectory traj = simulate(model, NoiseSpec{}, 2000, 4);
  const DataMatrices data = build_data_matrices(traj);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ols(data));
  }
}
BENCHMARK(BM_Ols)->Arg(10)->Arg(20);

void BM_ConstrainedLsL1(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd A_star = random_stable_matrix(n, 0.7, n, 5);
  const LdsModel model(A_star);
  const Trajectory traj = simulate(model, NoiseSpec{}, 1000, 6);
  const DataMatrices data = build_data_matrices(traj);
  const ConstraintSet K = ConstraintSet::l1_ball(A_star.lpNorm<1>());
  for (auto _ : state) {
    benchmark::DoNotOptimize(constrained_ls(data, K));
  }
}
BENCHMARK(BM_ConstrainedLsL1)->Arg(10)->Arg(20);

void BM_L1BallProject(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  SplitMix64 rng(7);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = rng.next_gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l1_ball_project(v, 1.0));
  }
}
BENCHMARK(BM_L1BallProject)->Arg(100)->Arg(10000);

void BM_WidthSampleL1Cone(benchmark::State& state) {
  const L1DescentCone cone = canonical_l1_descent_cone(10, 10);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_width_mc(cone, 10, seed++));
  }
}
BENCHMARK(BM_WidthSampleL1Cone);

}  // namespace

BENCHMARK_MAIN();
