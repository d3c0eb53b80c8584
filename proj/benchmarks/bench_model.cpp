#include <benchmark/benchmark.h>

#include "rhgcn/model.hpp"

namespace {

using namespace rhgcn;

struct Fixture {
  NodeDataset data;
  ModelConfig config;
  ModelParams params;

  Fixture(int blocks_size, int layers, const std::string& signature)
      : data(synth_graph(SynthSpec::parse("sbm:blocks=2,size=" + std::to_string(blocks_size) + ",p_in=0.2,p_out=0.01"),
                         0)) {
    config.product = build_product(parse_signature(signature), 0, 1.0);
    config.layers = layers;
    config.input_dim = data.features.cols();
    config.num_classes = data.num_classes;
    params = ModelParams::initialize(config, 0);
  }
};

void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), "2x8");
  for (auto _ : state) benchmark::DoNotOptimize(predict(f.config, f.params, f.data.features, f.data.graph));
  state.SetItemsProcessed(state.iterations() * f.data.graph.num_nodes());
}
BENCHMARK(BM_Forward)->Args({100, 2})->Args({100, 8})->Args({500, 8});

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), "16x1");
  for (auto _ : state) {
    ad::Tape tape;
    const auto bound = bind_parameters(tape, f.params, true);
    const auto out = forward(tape, f.config, f.params, bound, f.data.features, f.data.graph);
    const auto l = loss(out.log_probs, f.data.labels, f.data.splits.train);
    tape.backward(l);
    benchmark::DoNotOptimize(tape.grad(bound.classifier));
  }
  state.SetItemsProcessed(state.iterations() * f.data.graph.num_nodes());
}
BENCHMARK(BM_ForwardBackward)->Args({100, 2})->Args({100, 8})->Args({500, 8});

}  // namespace

BENCHMARK_MAIN();
