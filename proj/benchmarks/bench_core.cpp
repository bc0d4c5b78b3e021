#include <benchmark/benchmark.h>

#include "afrg/attacks.hpp"
#include "afrg/attractor.hpp"
#include "afrg/pieced.hpp"
#include "afrg/rng.hpp"

using namespace afrg;

namespace {

Model bench_model(std::size_t dim, std::size_t hidden, std::size_t classes) {
  SplitMix64 rng(1);
  std::vector<Layer> layers;
  Matrix w1(hidden, dim, 0.0);
  Vector b1(hidden, 0.0);
  for (std::size_t r = 0; r < hidden; ++r) {
    for (std::size_t c = 0; c < dim; ++c) w1(r, c) = 0.3 * rng.next_gaussian();
  }
  Matrix w2(classes, hidden, 0.0);
  Vector b2(classes, 0.0);
  for (std::size_t r = 0; r < classes; ++r) {
    for (std::size_t c = 0; c < hidden; ++c) w2(r, c) = 0.3 * rng.next_gaussian();
  }
  layers.push_back({std::move(w1), std::move(b1), Activation::relu});
  layers.push_back({std::move(w2), std::move(b2), Activation::identity});
  return Model(std::move(layers));
}

Vector bench_point(std::size_t dim) {
  SplitMix64 rng(2);
  Vector x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = rng.next_unit();
  return x;
}

void BM_Forward(benchmark::State& state) {
  Model m = bench_model(state.range(0), 32, 3);
  Vector x = bench_point(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.forward(x));
  }
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256);

void BM_InputGradient(benchmark::State& state) {
  Model m = bench_model(state.range(0), 32, 3);
  Vector x = bench_point(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(input_gradient(m, x, 0));
  }
}
BENCHMARK(BM_InputGradient)->Arg(64)->Arg(256);

void BM_QimEval(benchmark::State& state) {
  auto dec = gen_qim(DecoderSeed{3}, 3, state.range(0), 16);
  Vector x = bench_point(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_qim(dec, x));
  }
}
BENCHMARK(BM_QimEval)->Arg(64)->Arg(256);

void BM_PiecedGradient(benchmark::State& state) {
  Model m = bench_model(state.range(0), 32, 3);
  PiecedModel pm = piece_together(m, gen_qim(DecoderSeed{4}, 3, state.range(0), 16));
  Vector x = bench_point(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pieced_input_gradient(pm, x, 0));
  }
}
BENCHMARK(BM_PiecedGradient)->Arg(64)->Arg(256);

void BM_Fgsm(benchmark::State& state) {
  Model m = bench_model(64, 32, 3);
  ModelSurface s(m);
  Vector x = bench_point(64);
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg;
  cfg.kind = AttackKind::fgsm;
  cfg.epsilon = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fgsm(s, sample, cfg));
  }
}
BENCHMARK(BM_Fgsm);

void BM_Deepfool(benchmark::State& state) {
  Model m = bench_model(64, 32, 3);
  ModelSurface s(m);
  Vector x = bench_point(64);
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg;
  cfg.kind = AttackKind::deepfool;
  for (auto _ : state) {
    benchmark::DoNotOptimize(deepfool(s, sample, cfg));
  }
}
BENCHMARK(BM_Deepfool);

}  // namespace

BENCHMARK_MAIN();
