#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <random>

#include "vihmc/datagen.hpp"
#include "vihmc/hmc.hpp"
#include "vihmc/target.hpp"

using namespace vihmc;

namespace {

NetworkSpec mlp_1_10_10_1() {
  NetworkSpec n;
  n.mlp.input_dim = 1;
  n.mlp.layers = {{10, Activation::Tanh, true}, {10, Activation::Tanh, true},
                  {1, Activation::Identity, true}};
  return n;
}

NetworkSpec deeponet(Index sensors, Index width) {
  NetworkSpec n;
  n.kind = NetworkKind::DeepONet;
  n.branch.input_dim = sensors;
  n.branch.layers = {{width, Activation::Tanh, true}, {width, Activation::Tanh, true},
                     {width, Activation::Identity, true}};
  n.trunk.input_dim = 2;
  n.trunk.layers = {{width, Activation::Tanh, true}, {width, Activation::Tanh, true},
                    {width, Activation::Tanh, true}};
  n.output_bias = true;
  return n;
}

TargetPosterior sinusoid_target(Index n_train) {
  SinusoidSpec s;
  s.n_train = n_train;
  s.noise_sigma = 0.05;
  s.seed = 1;
  auto data = std::make_shared<const Dataset>(gen_sinusoid(s).first);
  PriorSpec prior;
  prior.variance = 1.0;
  LikelihoodSpec lik;
  lik.noise_variance = 0.0025;
  return TargetPosterior(mlp_1_10_10_1(), data, prior, lik);
}

TargetPosterior burgers_target(int fields) {
  BurgersSpec s;
  s.n_fields = fields;
  s.seed = 3;
  auto data = std::make_shared<const Dataset>(gen_burgers_dataset(s).first);
  PriorSpec prior;
  prior.variance = 0.01;
  LikelihoodSpec lik;
  lik.noise_variance = 1e-4;
  return TargetPosterior(deeponet(s.nx, 40), data, prior, lik);
}

void bm_mlp_gradient(benchmark::State& state) {
  const TargetPosterior t = sinusoid_target(state.range(0));
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = init_params(t.network(), rng);
  Eigen::VectorXd g(t.dim());
  for (auto _ : state) benchmark::DoNotOptimize(t.log_density_grad(x, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_mlp_gradient)->Arg(20)->Arg(200)->Arg(2000);

void bm_deeponet_gradient(benchmark::State& state) {
  const TargetPosterior t = burgers_target(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = init_params(t.network(), rng, 0.1);
  Eigen::VectorXd g(t.dim());
  for (auto _ : state) benchmark::DoNotOptimize(t.log_density_grad(x, g));
}
BENCHMARK(bm_deeponet_gradient)->Arg(4)->Arg(20)->Unit(benchmark::kMillisecond);

void bm_leapfrog(benchmark::State& state) {
  const TargetPosterior t = sinusoid_target(20);
  std::mt19937_64 rng(3);
  const HmcState start = make_state(t, init_params(t.network(), rng));
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd p(t.dim());
  for (Index i = 0; i < p.size(); ++i) p(i) = n(rng);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(leapfrog(t, start, p, 1e-4, steps));
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(bm_leapfrog)->Arg(10)->Arg(100);

void bm_solve_burgers(benchmark::State& state) {
  BurgersSpec s;
  s.nx = static_cast<int>(state.range(0));
  s.n_fields = 1;
  s.seed = 4;
  const Eigen::VectorXd u0 = gen_grf(s).row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(solve_burgers(u0, s));
}
BENCHMARK(bm_solve_burgers)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
