#include "../support/model.hpp"
#include "../support/fee_rows.hpp"
#include "../support/world.hpp"

#include "parking/domain/engine.hpp"
#include "parking/domain/errors.hpp"
#include "parking/domain/fee.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace parking;
using namespace std::chrono_literals;

namespace {

const Timestamp t0 = from_millis(support::World::kStart);

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const DomainError& e) {
        return e.code();
    }
    FAIL("expected DomainError");
    return ErrorCode::InvalidEvent;
}

RejectReason reason_of(const GateOutcome& out) {
    REQUIRE_FALSE(is_accepted(out.decision));
    return std::get<Rejected>(out.decision).reason;
}

struct Lot {
    Engine engine;
    SpaceId space;
    MotoristId amina;
    RfidUid amina_card = RfidUid::from("9C7A31B4");

    explicit Lot(EngineConfig cfg = {}, Tariff tariff = Tariff::free_of_charge())
        : engine(cfg) {
        auto spec = support::lot_spec("Lot A", 2);
        spec.tariff = tariff;
        space = engine.register_space(spec, t0).space_id;
        auto p = support::driver_profile(1);
        p.rfid_uid = "9C7A31B4";
        amina = engine.register_motorist(p, t0).motorist_id;
    }

    MotoristId another(int i) { return engine.register_motorist(support::driver_profile(i), t0).motorist_id; }
};

} // namespace

TEST_CASE("iso8601 round trip") {
    const auto t = from_millis(1714550400123);
    CHECK(format_iso8601(t) == "2024-05-01T08:00:00.123Z");
    CHECK(parse_iso8601("2024-05-01T08:00:00.123Z") == t);
    CHECK(parse_iso8601("2024-05-01T08:00:00Z") == from_millis(1714550400000));
    CHECK(parse_iso8601("2024-05-01T08:00:00.1Z") == from_millis(1714550400100));
    CHECK_FALSE(parse_iso8601("2024-05-01 08:00:00Z"));
    CHECK_FALSE(parse_iso8601("2024-13-01T08:00:00Z"));
    CHECK_FALSE(parse_iso8601(""));
}

TEST_CASE("rfid uid canonical form") {
    CHECK(RfidUid::from("9c7a31b4").str() == "9C7A31B4");
    CHECK(RfidUid::from("9C:7A:31:B4") == RfidUid::from("9c7a31b4"));
    CHECK(RfidUid::from("04 A2 2B 1A 55 80 01").byte_length() == 7);
    CHECK(RfidUid::parse("00112233445566778899"));
    CHECK_FALSE(RfidUid::parse("001122"));                 // 3 bytes
    CHECK_FALSE(RfidUid::parse("0011223344556677889900")); // 11 bytes
    CHECK_FALSE(RfidUid::parse("XYZ12345"));
    CHECK_FALSE(RfidUid::parse("9C7A31B"));
    CHECK(code_of([] { RfidUid::from("XYZ"); }) == ErrorCode::MalformedUid);
}

TEST_CASE("slot colours") {
    CHECK(slot_color(SlotKind::Vacant) == "green");
    CHECK(slot_color(SlotKind::Reserved) == "orange");
    CHECK(slot_color(SlotKind::Occupied) == "red");
}

// ---------------------------------------------------------------------------

TEST_CASE("fee table") {
    CHECK(std::size(support::kFeeTable) == 50);
    for (const auto& row : support::kFeeTable) {
        CAPTURE(row.label);
        Tariff t{row.free, Money{row.rate}, std::chrono::minutes{row.unit_min},
                 std::chrono::minutes{row.free_min}};
        CHECK(fee_for_duration(Duration{row.duration_ms}, t).minor == row.expected);
    }
}

TEST_CASE("fee for a session") {
    const auto tariff = Tariff::paid(Money{500}, 15min, 30min);
    ParkingSession s;
    s.entry_at = t0;
    CHECK(compute_fee(s, tariff, t0 + 61min).minor == 1500); // provisional, open session
    s.exit_at = t0 + 61min;
    CHECK(compute_fee(s, tariff, t0 + 500min).minor == 1500);
    s.exit_at = t0 - 1ms;
    CHECK(code_of([&] { compute_fee(s, tariff, t0); }) == ErrorCode::NegativeDuration);
    CHECK(code_of([&] { fee_for_duration(Duration{-1}, tariff); }) == ErrorCode::NegativeDuration);
}

TEST_CASE("fee is monotone in duration and zero when free") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto tariff = Tariff::paid(Money{std::uniform_int_distribution<int>(0, 5000)(rng)},
                                         std::chrono::minutes{std::uniform_int_distribution<int>(1, 120)(rng)},
                                         std::chrono::minutes{std::uniform_int_distribution<int>(0, 90)(rng)});
        std::vector<std::int64_t> ds(20);
        for (auto& d : ds) d = std::uniform_int_distribution<std::int64_t>(0, 86400000)(rng);
        std::sort(ds.begin(), ds.end());
        std::int64_t prev = 0;
        for (auto d : ds) {
            const auto fee = fee_for_duration(Duration{d}, tariff).minor;
            CHECK(fee >= prev);
            prev = fee;
            CHECK(fee_for_duration(Duration{d}, Tariff::free_of_charge()).minor == 0);
        }
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("register_space") {
    Engine e;
    auto s = e.register_space(support::lot_spec("Lot A", 2), t0);
    CHECK(s.slots == std::vector<SlotState>{Vacant{}, Vacant{}});
    CHECK(e.availability(s.space_id) == Availability{2, 0, 0});

    auto big = e.register_space(support::lot_spec("Big", 50), t0);
    CHECK(big.capacity() == 50);
    CHECK(count_slots(big) == Availability{50, 0, 0});
    CHECK(e.availability(big.space_id).vacant == 50);
    CHECK(big.space_id != s.space_id);

    CHECK(code_of([&] { e.register_space(support::lot_spec("Zero", 0), t0); }) ==
          ErrorCode::InvalidCapacity);
    auto bad = support::lot_spec("Bad", 2);
    bad.location = {91.0, 0.0};
    CHECK(code_of([&] { e.register_space(bad, t0); }) == ErrorCode::InvalidCoordinates);
    bad.location = {0.0, -180.5};
    CHECK(code_of([&] { e.register_space(bad, t0); }) == ErrorCode::InvalidCoordinates);
    bad.location = {0.0, 0.0};
    bad.tariff = Tariff::paid(Money{100}, 0min, 0min);
    CHECK(code_of([&] { e.register_space(bad, t0); }) == ErrorCode::InvalidTariff);
    CHECK(e.list_spaces().size() == 2);
}

TEST_CASE("register_motorist") {
    Engine e;
    auto p = support::driver_profile(1);
    p.rfid_uid = "9c7a31b4";
    auto m = e.register_motorist(p, t0);
    CHECK(m.rfid_uid.str() == "9C7A31B4");
    CHECK(e.find_motorist_by_uid(RfidUid::from("9C7A31B4"))->motorist_id == m.motorist_id);
    CHECK_FALSE(e.find_motorist_by_uid(RfidUid::from("DEADBEEF")));

    auto dup = support::driver_profile(2);
    dup.rfid_uid = "9C:7A:31:B4";
    CHECK(code_of([&] { e.register_motorist(dup, t0); }) == ErrorCode::DuplicateCredential);
    auto same_id = support::driver_profile(3);
    same_id.national_id = p.national_id;
    CHECK(code_of([&] { e.register_motorist(same_id, t0); }) == ErrorCode::DuplicateNationalId);
    auto bad = support::driver_profile(4);
    bad.rfid_uid = "XYZ";
    CHECK(code_of([&] { e.register_motorist(bad, t0); }) == ErrorCode::MalformedUid);
    auto no_id = support::driver_profile(5);
    no_id.national_id = "";
    CHECK(code_of([&] { e.register_motorist(no_id, t0); }) == ErrorCode::InvalidProfile);
}

TEST_CASE("bind_card") {
    Engine e;
    auto a = e.register_motorist(support::driver_profile(1), t0);
    auto b = e.register_motorist(support::driver_profile(2), t0);
    auto bound = e.bind_card(a.motorist_id, "0a0b0c0d", t0);
    CHECK(bound.rfid_uid.str() == "0A0B0C0D");
    CHECK_FALSE(e.find_motorist_by_uid(a.rfid_uid));
    CHECK(code_of([&] { e.bind_card(b.motorist_id, "0A0B0C0D", t0); }) ==
          ErrorCode::DuplicateCredential);
    CHECK(code_of([&] { e.bind_card(MotoristId{"nobody"}, "01020304", t0); }) ==
          ErrorCode::UnknownMotorist);
}

TEST_CASE("reserve_slot") {
    Lot lot;
    auto& e = lot.engine;
    auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
    CHECK(r.expires_at == t0 + 30min);
    CHECK(r.status == ReservationStatus::Active);
    CHECK(kind_of(e.find_space(lot.space)->slots[0]) == SlotKind::Reserved);
    CHECK(e.availability(lot.space) == Availability{1, 1, 0});

    const auto other = lot.another(2);
    CHECK(code_of([&] { e.reserve_slot(lot.space, 1, other, t0); }) == ErrorCode::SlotNotVacant);
    CHECK(code_of([&] { e.reserve_slot(lot.space, 2, lot.amina, t0); }) ==
          ErrorCode::MotoristHasActiveClaim);
    CHECK(code_of([&] { e.reserve_slot(lot.space, 3, other, t0); }) == ErrorCode::UnknownSlot);
    CHECK(code_of([&] { e.reserve_slot(lot.space, 0, other, t0); }) == ErrorCode::UnknownSlot);
    CHECK(code_of([&] { e.reserve_slot(SpaceId{"nope"}, 1, other, t0); }) ==
          ErrorCode::UnknownSpace);
    CHECK(code_of([&] { e.reserve_slot(lot.space, 2, MotoristId{"nobody"}, t0); }) ==
          ErrorCode::UnknownMotorist);
}

TEST_CASE("one active claim per credential across spaces") {
    Lot lot;
    auto& e = lot.engine;
    auto b = e.register_space(support::lot_spec("Lot B", 3), t0).space_id;
    e.reserve_slot(lot.space, 1, lot.amina, t0);
    CHECK(code_of([&] { e.reserve_slot(b, 1, lot.amina, t0); }) ==
          ErrorCode::MotoristHasActiveClaim);
}

TEST_CASE("cancel_reservation") {
    Lot lot;
    auto& e = lot.engine;
    auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
    e.cancel_reservation(r.reservation_id, t0 + 1min);
    CHECK(e.availability(lot.space) == Availability{2, 0, 0});
    CHECK(e.find_reservation(r.reservation_id)->status == ReservationStatus::Cancelled);
    CHECK(code_of([&] { e.cancel_reservation(r.reservation_id, t0 + 2min); }) ==
          ErrorCode::NotActive);
    CHECK(code_of([&] { e.cancel_reservation(ReservationId{"nope"}, t0); }) ==
          ErrorCode::UnknownReservation);

    // Released slot can be taken by someone else.
    auto r2 = e.reserve_slot(lot.space, 1, lot.another(2), t0 + 3min);
    CHECK(r2.status == ReservationStatus::Active);
}

TEST_CASE("expire_reservations") {
    Engine e;
    auto space = e.register_space(support::lot_spec("Lot", 10), t0).space_id;
    CHECK(e.expire_reservations(t0).empty());

    std::mt19937_64 rng(3);
    std::vector<Reservation> all;
    for (int i = 0; i < 10; ++i) {
        auto m = e.register_motorist(support::driver_profile(i), t0).motorist_id;
        const auto at = t0 + std::chrono::minutes{std::uniform_int_distribution<int>(0, 60)(rng)};
        all.push_back(e.reserve_slot(space, static_cast<SlotNo>(i + 1), m, at));
    }
    const auto now = t0 + 55min;
    std::vector<ReservationId> want;
    for (const auto& r : all) {
        if (r.expires_at <= now) want.push_back(r.reservation_id);
    }
    auto got = e.expire_reservations(now);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    CHECK_FALSE(want.empty());
    CHECK(e.availability(space).reserved == 10 - want.size());
    CHECK(e.expire_reservations(now).empty());
}

TEST_CASE("expiry boundary is inclusive") {
    Lot lot;
    auto& e = lot.engine;
    auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
    CHECK(e.expire_reservations(r.expires_at - 1ms).empty());
    CHECK(e.expire_reservations(r.expires_at) == std::vector{r.reservation_id});
    CHECK(e.availability(lot.space) == Availability{2, 0, 0});
}

TEST_CASE("check_in and check_out lifecycle") {
    Lot lot;
    auto& e = lot.engine;
    auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
    CHECK(std::get<Reservation>(*e.active_claim(lot.amina_card, lot.space)).reservation_id ==
          r.reservation_id);

    auto in = e.check_in(lot.space, lot.amina_card, t0 + 10min);
    REQUIRE(is_accepted(in.decision));
    CHECK(std::get<Accepted>(in.decision).action == GateAction::OpenEntry);
    CHECK(display_text(in.decision) == "ACCESS GRANTED");
    REQUIRE(in.session);
    CHECK(in.session->slot_no == 1);
    CHECK(in.session->entry_at == t0 + 10min);
    CHECK(e.find_reservation(r.reservation_id)->status == ReservationStatus::Converted);
    CHECK(slot_color(kind_of(e.find_space(lot.space)->slots[0])) == "red");
    CHECK(std::holds_alternative<ParkingSession>(*e.active_claim(lot.amina_card, lot.space)));
    CHECK(reason_of(e.check_in(lot.space, lot.amina_card, t0 + 11min)) ==
          RejectReason::AlreadyInside);

    auto out = e.check_out(lot.space, lot.amina_card, t0 + 105min);
    REQUIRE(is_accepted(out.decision));
    CHECK(std::get<Accepted>(out.decision).action == GateAction::OpenExit);
    CHECK(out.session->exit_at == t0 + 105min);
    CHECK(out.session->fee == Money{0}); // 95 minutes in a free lot
    CHECK(e.availability(lot.space) == Availability{2, 0, 0});
    CHECK_FALSE(e.active_claim(lot.amina_card, lot.space));
    CHECK(reason_of(e.check_out(lot.space, lot.amina_card, t0 + 106min)) ==
          RejectReason::NotInside);
}

TEST_CASE("paid exit charges the session") {
    Lot lot({}, Tariff::paid(Money{500}, 15min, 30min));
    auto& e = lot.engine;
    e.reserve_slot(lot.space, 2, lot.amina, t0);
    e.check_in(lot.space, lot.amina_card, t0 + 1min);
    auto out = e.check_out(lot.space, lot.amina_card, t0 + 62min);
    CHECK(out.session->fee == Money{1500});
}

TEST_CASE("gate rejections leave state alone") {
    Lot lot;
    auto& e = lot.engine;
    const auto before = e.state();
    CHECK(reason_of(e.check_in(lot.space, RfidUid::from("DEADBEEF"), t0)) ==
          RejectReason::UnknownCard);
    CHECK(reason_of(e.check_in(lot.space, lot.amina_card, t0)) == RejectReason::NoReservation);
    CHECK(reason_of(e.check_out(lot.space, lot.amina_card, t0)) == RejectReason::NotInside);
    CHECK(reason_of(e.check_out(lot.space, RfidUid::from("DEADBEEF"), t0)) ==
          RejectReason::UnknownCard);
    CHECK(display_text(e.check_in(lot.space, lot.amina_card, t0).decision) == "ACCESS DENIED");
    CHECK(e.state() == before);
    CHECK(code_of([&] { e.check_in(SpaceId{"nope"}, lot.amina_card, t0); }) ==
          ErrorCode::UnknownSpace);
}

TEST_CASE("reservation at another space does not open this gate") {
    Lot lot;
    auto& e = lot.engine;
    auto b = e.register_space(support::lot_spec("Lot B", 2), t0).space_id;
    e.reserve_slot(b, 1, lot.amina, t0);
    CHECK(reason_of(e.check_in(lot.space, lot.amina_card, t0)) == RejectReason::NoReservation);
    CHECK(is_accepted(e.check_in(b, lot.amina_card, t0).decision));
}

TEST_CASE("expired reservation rejects the same with or without a sweep") {
    for (bool sweep : {false, true}) {
        CAPTURE(sweep);
        Lot lot;
        auto& e = lot.engine;
        auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
        const auto now = r.expires_at + 1s;
        if (sweep) e.expire_reservations(now);
        CHECK(reason_of(e.check_in(lot.space, lot.amina_card, now)) ==
              RejectReason::ReservationExpired);
    }
}

TEST_CASE("walk-in flag") {
    Lot closed;
    CHECK(reason_of(closed.engine.check_in(closed.space, closed.amina_card, t0)) ==
          RejectReason::NoReservation);

    Lot open(EngineConfig{30min, true});
    auto& e = open.engine;
    auto other = open.another(2);
    e.reserve_slot(open.space, 1, other, t0);
    auto in = e.check_in(open.space, open.amina_card, t0);
    REQUIRE(is_accepted(in.decision));
    CHECK(in.session->slot_no == 2);
    CHECK_FALSE(in.session->reservation_id);
    auto third = e.register_motorist(support::driver_profile(3), t0);
    CHECK(reason_of(e.check_in(open.space, third.rfid_uid, t0)) == RejectReason::NoVacancy);
}

TEST_CASE("availability after one reserve and one check-in") {
    Lot lot;
    auto& e = lot.engine;
    auto other = lot.another(2);
    auto other_card = e.find_motorist(other)->rfid_uid;
    e.reserve_slot(lot.space, 1, lot.amina, t0);
    e.reserve_slot(lot.space, 2, other, t0);
    e.check_in(lot.space, other_card, t0 + 1min);
    CHECK(e.availability(lot.space) == Availability{0, 1, 1});
}

TEST_CASE("observers see every slot transition") {
    Lot lot;
    auto& e = lot.engine;
    std::vector<std::pair<std::uint64_t, ChangeCause>> seen;
    e.add_observer([&](const EventRecord& rec, const std::optional<StateChange>& ch) {
        if (ch) seen.emplace_back(rec.seq, ch->cause);
    });
    auto r = e.reserve_slot(lot.space, 1, lot.amina, t0);
    e.check_in(lot.space, lot.amina_card, t0 + 1min);
    e.check_out(lot.space, lot.amina_card, t0 + 2min);
    REQUIRE(seen.size() == 3);
    CHECK(seen[0].second == ChangeCause::Reserved);
    CHECK(seen[1].second == ChangeCause::CheckedIn);
    CHECK(seen[2].second == ChangeCause::CheckedOut);
    CHECK(seen[2].first == e.last_seq());
    (void)r;
}

TEST_CASE("journal veto leaves state unchanged") {
    Lot lot;
    auto& e = lot.engine;
    const auto before = e.state();
    e.set_journal([](const EventRecord&) { throw std::runtime_error("disk full"); });
    CHECK_THROWS_AS(e.reserve_slot(lot.space, 1, lot.amina, t0), std::runtime_error);
    CHECK(e.state() == before);
}

TEST_CASE("engine agrees with the reference model") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Engine engine;
        support::World w(engine, {2, 3, 1}, 6);
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 400; ++i) {
            auto step = w.random_step(rng);
            CAPTURE(seed);
            CAPTURE(i);
            CAPTURE(step.op);
            REQUIRE(step.got == step.want);
            REQUIRE(w.divergence() == "");
        }
    }
}

TEST_CASE("determinism: same operations give the same state and events") {
    auto run = [] {
        Engine engine;
        std::vector<EventRecord> events;
        engine.set_journal([&](const EventRecord& r) { events.push_back(r); });
        support::World w(engine, {2, 2}, 4);
        std::mt19937_64 rng(99);
        for (int i = 0; i < 300; ++i) w.random_step(rng);
        return std::pair{engine.state(), events};
    };
    CHECK(run() == run());
}

TEST_CASE("restore rebuilds indexes") {
    Lot lot;
    auto& e = lot.engine;
    e.reserve_slot(lot.space, 1, lot.amina, t0);
    auto copy = Engine::restore(e.state());
    CHECK(copy.state() == e.state());
    CHECK(code_of([&] { copy.reserve_slot(lot.space, 2, lot.amina, t0); }) ==
          ErrorCode::MotoristHasActiveClaim);
    CHECK(is_accepted(copy.check_in(lot.space, lot.amina_card, t0).decision));
}
