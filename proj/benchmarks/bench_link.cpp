#include "parking/link/frame.hpp"

#include <benchmark/benchmark.h>

using namespace parking;
using namespace parking::link;

namespace {

DeviceFrame auth_resp() {
    return DeviceFrame{42, from_millis(1714550400000),
                       AuthResp{7, Accepted{GateAction::OpenExit, "ACCESS GRANTED"}, SlotNo{3},
                                Money{1500}}};
}

} // namespace

static void BM_Encode(benchmark::State& state) {
    const auto f = auth_resp();
    for (auto _ : state) benchmark::DoNotOptimize(encode_frame(f));
}
BENCHMARK(BM_Encode);

static void BM_Decode(benchmark::State& state) {
    const auto line = encode_frame(auth_resp());
    for (auto _ : state) benchmark::DoNotOptimize(decode_frame(line));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(line.size()));
}
BENCHMARK(BM_Decode);

static void BM_DecodeGarbage(benchmark::State& state) {
    std::string line = encode_frame(auth_resp());
    line[line.size() / 2] = '\x01';
    for (auto _ : state) benchmark::DoNotOptimize(decode_frame(line));
}
BENCHMARK(BM_DecodeGarbage);
