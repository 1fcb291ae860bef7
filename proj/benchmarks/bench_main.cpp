#include <benchmark/benchmark.h>

#include <vector>

#include "bhlr/divergence.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/random.hpp"
#include "bhlr/sampler.hpp"
#include "bhlr/simfn.hpp"
#include "bhlr/synth.hpp"

using namespace bhlr;

namespace {

Hypernetwork planted_network(std::size_t n, std::size_t order) {
  Rng rng(1);
  const PlantedModel planted{SimilarityModel::initialized(EmbeddingMap::linear(8, 4), LinkKind::Sigmoid, order, rng),
                             {NoiseKind::Bernoulli, 0.0}};
  return generate(planted, n, IndexPolicy::IncreasingOnly, 2);
}

void BM_SimilarityGradient(benchmark::State& state) {
  const auto order = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const SimilarityModel model =
      SimilarityModel::initialized(EmbeddingMap::mlp1(16, 64, 16), LinkKind::Sigmoid, order, rng);
  SimilarityEvaluator ev(model);
  std::vector<double> x(order * 16);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  std::vector<std::span<const double>> rows;
  for (std::size_t k = 0; k < order; ++k) rows.emplace_back(x.data() + 16 * k, 16);
  std::vector<double> grad(model.param_count(), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev.forward(rows));
    ev.backward(1.0, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_SimilarityGradient)->Arg(2)->Arg(3);

void BM_SamplerDraw(benchmark::State& state) {
  const Hypernetwork net = planted_network(200, 3);
  SamplerConfig cfg;
  cfg.v = 1;
  cfg.u = {0};
  cfg.m_plus = 6;
  cfg.m_minus = 10;
  cfg.allow_empty_positive = true;
  MinibatchSampler sampler(net, cfg);
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng));
}
BENCHMARK(BM_SamplerDraw);

void BM_FullGradient(benchmark::State& state) {
  const Hypernetwork net = planted_network(static_cast<std::size_t>(state.range(0)), 2);
  Rng rng(5);
  const SimilarityModel model = SimilarityModel::initialized(EmbeddingMap::linear(8, 4), LinkKind::Sigmoid, 2, rng);
  LossSpec spec;
  spec.divergence = GeneratingFunction::logistic();
  spec.threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(full_gradient(spec, model, net));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(net.index_count()));
}
BENCHMARK(BM_FullGradient)->Args({200, 1})->Args({200, 4})->Args({1000, 1})->Args({1000, 4});

}  // namespace

BENCHMARK_MAIN();
