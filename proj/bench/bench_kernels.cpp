// Serial reference kernels against the OpenMP versions. The second benchmark
// argument selects the policy: 0 = reference, 1 = parallel.

#include <benchmark/benchmark.h>

#include "qmcvi/estimators.hpp"
#include "qmcvi/transforms.hpp"

using namespace qmcvi;

namespace {

ExecPolicy policy(const benchmark::State& state) {
  return state.range(1) == 0 ? ExecPolicy::reference : ExecPolicy::parallel;
}

void BM_GenerateScrambled(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lds::SequenceSource src{lds::SequenceKind::rqmc_scramble, 64, 1, 0};
  for (auto _ : state) {
    auto b = lds::generate(src, n, lds::DirectionTable::bundled(), policy(state));
    benchmark::DoNotOptimize(b);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_ApplyTransform(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const transforms::TransformSpec spec({transforms::TransformSpec::lognormal(0, 64, {0.0}, {0.5})});
  const auto u = lds::generate({lds::SequenceKind::mc, 64, 2, 0}, n);
  for (auto _ : state) {
    auto z = transforms::apply(spec, u, policy(state));
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_GradReparamHlr(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = models::hierarchical_lr(100, 10, 1);
  const auto fam = model->variational_family();
  const auto lam = families::VarParams::uniform(fam, 0.1, 0.0);
  const auto u = lds::generate({lds::SequenceKind::rqmc_scramble, model->latent_dim(), 3, 0}, n);
  const estimators::EstimatorOptions opts{estimators::EntropyMode::analytic, policy(state)};
  for (auto _ : state) {
    auto g = estimators::grad_reparam(*model, fam, lam, u, opts);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_GradScorePoisson(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = models::multilevel_poisson(4, 30, 1);
  const auto fam = model->variational_family();
  const auto lam = families::VarParams::uniform(fam, 0.1, 0.0);
  const auto u = lds::generate({lds::SequenceKind::mc, model->latent_dim(), 3, 0}, n);
  const estimators::EstimatorOptions opts{estimators::EntropyMode::analytic, policy(state)};
  for (auto _ : state) {
    auto g = estimators::grad_score(*model, fam, lam, u, opts);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_GenerateScrambled)->ArgsProduct({{1 << 10, 1 << 14}, {0, 1}})->ArgNames({"n", "par"});
BENCHMARK(BM_ApplyTransform)->ArgsProduct({{1 << 10, 1 << 14}, {0, 1}})->ArgNames({"n", "par"});
BENCHMARK(BM_GradReparamHlr)->ArgsProduct({{64, 1024}, {0, 1}})->ArgNames({"n", "par"});
BENCHMARK(BM_GradScorePoisson)->ArgsProduct({{64, 4096}, {0, 1}})->ArgNames({"n", "par"});

BENCHMARK_MAIN();
