#include "parking/store/event_log.hpp"
#include "parking/store/snapshot.hpp"
#include "parking/store/store.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

using namespace parking;
using namespace parking::store;

namespace {

const Timestamp t0 = from_millis(1714550400000);

EventRecord space_event(std::uint64_t seq) {
    ParkingSpace s;
    s.space_id = SpaceId{"sp-" + std::to_string(seq)};
    s.name = "Lot";
    s.slots.resize(4);
    return EventRecord{seq, t0, SpaceRegistered{s}};
}

std::filesystem::path scratch(const char* name) {
    auto p = std::filesystem::temp_directory_path() /
             (std::string("parking-bench-") + name + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

static void BM_LogAppend(benchmark::State& state) {
    const bool sync = state.range(0) != 0;
    const auto dir = scratch("append");
    std::filesystem::create_directories(dir);
    {
        auto log = EventLog::open(dir / "events.log", {sync, 0});
        std::uint64_t seq = 0;
        for (auto _ : state) log.append(space_event(++seq));
    }
    state.SetItemsProcessed(state.iterations());
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_LogAppend)->Arg(0)->Arg(1);

static void BM_EncodeRecord(benchmark::State& state) {
    const auto rec = space_event(9);
    for (auto _ : state) benchmark::DoNotOptimize(encode_record(rec));
}
BENCHMARK(BM_EncodeRecord);

static void BM_Replay(benchmark::State& state) {
    std::vector<EventRecord> events;
    for (std::uint64_t s = 1; s <= static_cast<std::uint64_t>(state.range(0)); ++s) {
        events.push_back(space_event(s));
    }
    for (auto _ : state) benchmark::DoNotOptimize(replay(events));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Replay)->Arg(1000);
