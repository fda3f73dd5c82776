// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cirrange/channel.hpp"
#include "cirrange/lte_grid.hpp"
#include "cirrange/receiver.hpp"

using namespace cirrange;

namespace {

const lte::Numerology& num10() {
    static const auto n = lte::build_numerology(10e6);
    return n;
}

void BM_OfdmModulate(benchmark::State& state) {
    const auto grid = lte::build_transmit_grid(num10(), 0, 1);
    for (auto _ : state) benchmark::DoNotOptimize(lte::ofdm_modulate(grid, num10()));
}
BENCHMARK(BM_OfdmModulate)->Unit(benchmark::kMillisecond);

void BM_OfdmDemodulate(benchmark::State& state) {
    const auto w = lte::ofdm_modulate(lte::build_transmit_grid(num10(), 0, 1), num10());
    for (auto _ : state) benchmark::DoNotOptimize(rx::ofdm_demodulate(w, num10(), 0, 0));
}
BENCHMARK(BM_OfdmDemodulate)->Unit(benchmark::kMillisecond);

void BM_ApplyChannel(benchmark::State& state) {
    const auto w = lte::ofdm_modulate(lte::build_transmit_grid(num10(), 0, 1), num10());
    const auto chan = channel::sample_channel(channel::ScenarioConfig::multipath_default(), 150.0, 3);
    for (auto _ : state) benchmark::DoNotOptimize(channel::apply_channel(w, chan, num10(), 4));
}
BENCHMARK(BM_ApplyChannel)->Unit(benchmark::kMillisecond);

// One dataset sample: channel, CFO correction, LS, CIR image.
void BM_ProcessFrame(benchmark::State& state) {
    const auto ref = lte::make_crs_reference(num10(), 0);
    const auto w = lte::ofdm_modulate(lte::build_transmit_grid(num10(), 0, 1), num10());
    const auto chan = channel::sample_channel(channel::ScenarioConfig::los_default(), 80.0, 3);
    const auto rxw = channel::apply_channel(w, chan, num10(), 4);
    rx::ReceiverConfig cfg;
    cfg.refine_cfo = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(rx::process_frame(rxw, num10(), ref, cfg));
}
BENCHMARK(BM_ProcessFrame)->Arg(0)->Arg(1)->ArgName("refine")->Unit(benchmark::kMillisecond);

}  // namespace
