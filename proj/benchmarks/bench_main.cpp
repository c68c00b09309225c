#include "netdist/algorithms.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace netdist;

namespace {

struct Instance {
  DistributedProblem prob;
  MixingScheme scheme;
  Stack x0;
};

Instance make_instance(int n, int m, int d) {
  SyntheticParams p;
  p.n = n;
  p.m = m;
  p.d = d;
  p.varrho = varrho_for_condition(10.0, d);
  Instance in{DistributedProblem::make(make_oracles(generate_synthetic(p).shards, LossKind::quadratic)),
              MixingScheme::with_s_matrix(
                  metropolis_weights(build_graph(GraphKind::erdos_renyi, n, GraphParams{0.3, 0, 0}, 1))),
              Stack::Zero(n, d)};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) in.x0(i, k) = g(rng);
  return in;
}

void BM_MixRounds(benchmark::State& state) {
  const auto in = make_instance(20, 10, 40);
  const auto mode = state.range(1) ? MixingMode::chebyshev : MixingMode::plain;
  const int K = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mix_rounds(in.scheme.x_matrix, mode, K, in.x0));
}
BENCHMARK(BM_MixRounds)->ArgsProduct({{1, 5, 20}, {0, 1}});

void BM_NesterovSurrogate(benchmark::State& state) {
  const auto in = make_instance(2, 200, static_cast<int>(state.range(0)));
  const Vector y = in.x0.row(0).transpose();
  const auto sur = make_surrogate(in.prob.oracles[0], y, Vector::Ones(y.size()), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(nesterov_agd(sur, y));
}
BENCHMARK(BM_NesterovSurrogate)->Arg(10)->Arg(40)->Arg(100);

void BM_DaneStep(benchmark::State& state) {
  const auto in = make_instance(20, 200, 40);
  AlgorithmConfig cfg;
  cfg.mu = 1e-6;
  cfg.local = state.range(0) ? LocalSolver::closed_form : LocalSolver::nesterov;
  NetworkState st = init_state(in.x0, in.prob);
  for (auto _ : state) network_dane_step(st, in.prob, in.scheme, cfg);
}
BENCHMARK(BM_DaneStep)->Arg(0)->Arg(1);

void BM_SvrgStep(benchmark::State& state) {
  const auto in = make_instance(20, 200, 40);
  AlgorithmConfig cfg;
  cfg.kind = AlgorithmKind::network_svrg;
  cfg.delta = 0.01;
  cfg.S = static_cast<int>(state.range(0));
  NetworkState st = init_state(in.x0, in.prob);
  for (auto _ : state) network_svrg_step(st, in.prob, in.scheme, cfg);
}
BENCHMARK(BM_SvrgStep)->Arg(10)->Arg(100);

}  // namespace
BENCHMARK_MAIN();
