#include "parking/domain/engine.hpp"
#include "parking/domain/fee.hpp"

#include <benchmark/benchmark.h>

using namespace parking;
using namespace std::chrono_literals;

namespace {

const Timestamp t0 = from_millis(1714550400000);

struct Lot {
    Engine engine;
    SpaceId space;
    std::vector<Motorist> drivers;

    explicit Lot(int capacity) {
        SpaceSpec spec;
        spec.name = "Bench";
        spec.location = {0.3, 32.5};
        spec.capacity = capacity;
        spec.tariff = Tariff::paid(Money{1000}, 60min, 15min);
        space = engine.register_space(spec, t0).space_id;
        for (int i = 0; i < capacity; ++i) {
            MotoristProfile p;
            p.full_name = "Driver";
            p.national_id = "N" + std::to_string(i);
            char uid[16];
            std::snprintf(uid, sizeof uid, "B0%06X", i);
            p.rfid_uid = uid;
            drivers.push_back(engine.register_motorist(p, t0));
        }
    }
};

} // namespace

static void BM_ReserveCancel(benchmark::State& state) {
    Lot lot(static_cast<int>(state.range(0)));
    auto now = t0;
    for (auto _ : state) {
        now += 1s;
        auto r = lot.engine.reserve_slot(lot.space, 1, lot.drivers[0].motorist_id, now);
        lot.engine.cancel_reservation(r.reservation_id, now);
    }
    state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_ReserveCancel)->Arg(2)->Arg(200);

static void BM_FullVisit(benchmark::State& state) {
    Lot lot(static_cast<int>(state.range(0)));
    auto now = t0;
    for (auto _ : state) {
        const auto& d = lot.drivers[0];
        now += 1s;
        lot.engine.reserve_slot(lot.space, 1, d.motorist_id, now);
        lot.engine.check_in(lot.space, d.rfid_uid, now);
        now += 90min;
        benchmark::DoNotOptimize(lot.engine.check_out(lot.space, d.rfid_uid, now));
    }
    state.SetItemsProcessed(state.iterations() * 3);
}
BENCHMARK(BM_FullVisit)->Arg(2)->Arg(200);

static void BM_ExpirySweep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        state.PauseTiming();
        Lot lot(n);
        for (int i = 0; i < n; ++i) {
            lot.engine.reserve_slot(lot.space, static_cast<SlotNo>(i + 1), lot.drivers[i].motorist_id, t0);
        }
        state.ResumeTiming();
        benchmark::DoNotOptimize(lot.engine.expire_reservations(t0 + 31min));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ExpirySweep)->Arg(10)->Arg(500);

static void BM_Fee(benchmark::State& state) {
    const auto tariff = Tariff::paid(Money{500}, 15min, 30min);
    std::int64_t ms = 0;
    for (auto _ : state) {
        ms = (ms + 7919) % 86400000;
        benchmark::DoNotOptimize(fee_for_duration(Duration{ms}, tariff));
    }
}
BENCHMARK(BM_Fee);
