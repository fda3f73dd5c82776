// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cirrange/nn/layers.hpp"
#include "cirrange/ranging.hpp"
#include "cirrange/rng.hpp"

using namespace cirrange;

namespace {

nn::Tensor random_tensor(const nn::Shape& shape, std::uint64_t seed) {
    nn::Tensor t(shape);
    Rng rng(seed);
    for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
}

// Second CNN stage: [19, 31, 32] -> [17, 29, 32].
void BM_Conv2dForward(benchmark::State& state) {
    const auto x = random_tensor({19, 31, 32}, 1);
    const auto w = random_tensor({3, 3, 32, 32}, 2);
    const auto b = random_tensor({32}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward(x, w, b));
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMicrosecond);

void BM_Conv2dBackward(benchmark::State& state) {
    const auto x = random_tensor({19, 31, 32}, 1);
    const auto w = random_tensor({3, 3, 32, 32}, 2);
    const auto g = random_tensor({17, 29, 32}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(x, w, g));
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMicrosecond);

void BM_CnnPredict(benchmark::State& state) {
    auto model = ranging::build_cir_cnn(40, 64, 1);
    model.net.init_kaiming_uniform(1);
    const auto x = random_tensor({40, 64, 1}, 5);
    for (auto _ : state) benchmark::DoNotOptimize(ranging::predict(model, x));
}
BENCHMARK(BM_CnnPredict)->Unit(benchmark::kMicrosecond);

// One epoch over `batch` samples with a single Adam step.
void BM_CnnTrainStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    ranging::TrainingSet set;
    for (std::size_t i = 0; i < n; ++i) {
        set.inputs.push_back(random_tensor({40, 64, 1}, 10 + i));
        set.labels_m.push_back(60.0 + static_cast<double>(i % 40));
    }
    ranging::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = n;
    const auto model = ranging::build_cir_cnn(40, 64, 1);
    for (auto _ : state) benchmark::DoNotOptimize(ranging::train(model, set, cfg));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_CnnTrainStep)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
