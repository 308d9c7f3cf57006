#include <benchmark/benchmark.h>

#include "ordgp/deriv.hpp"
#include "ordgp/gp.hpp"
#include "ordgp/harness/synthetic.hpp"
#include "ordgp/transform.hpp"
#include "ordgp/variational.hpp"

using namespace ordgp;

namespace {

harness::SyntheticData dataset(int n) {
  harness::SyntheticSpec spec;
  spec.n = n;
  spec.sigma_t = 1.0;
  spec.seed = 7;
  return harness::generate_dataset(spec);
}

const Matern32Kernel kKernel(KernelParams(2.0, 1.5));

void BM_CovarianceParallel(benchmark::State& state) {
  const auto synth = dataset(static_cast<int>(state.range(0)));
  const Eigen::VectorXd tau = synth.truth.values();
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariance_matrix(tau, synth.data.sigma_y, kKernel));
  }
}

void BM_CovarianceSerial(benchmark::State& state) {
  const auto synth = dataset(static_cast<int>(state.range(0)));
  const Eigen::VectorXd tau = synth.truth.values();
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariance_matrix_serial(tau, synth.data.sigma_y, kKernel));
  }
}

void BM_HessianRecursion(benchmark::State& state) {
  const auto synth = dataset(static_cast<int>(state.range(0)));
  const TransformedLatent x = to_latent(synth.truth);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hess_diag_loglik_l(x, synth.data, kKernel));
  }
}

void BM_HessianNaive(benchmark::State& state) {
  const auto synth = dataset(static_cast<int>(state.range(0)));
  const TransformedLatent x = to_latent(synth.truth);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::derivatives(x, synth.data, kKernel));
  }
}

void BM_NpvFit(benchmark::State& state) {
  const auto synth = dataset(25);
  FitConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(synth.data, config));
  }
}

}  // namespace

BENCHMARK(BM_CovarianceParallel)->Arg(100)->Arg(400)->Arg(1600);
BENCHMARK(BM_CovarianceSerial)->Arg(100)->Arg(400)->Arg(1600);
BENCHMARK(BM_HessianRecursion)->Arg(10)->Arg(25)->Arg(50);
BENCHMARK(BM_HessianNaive)->Arg(10)->Arg(25);
BENCHMARK(BM_NpvFit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
