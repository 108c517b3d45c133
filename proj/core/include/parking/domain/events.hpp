#pragma once

#include "parking/domain/types.hpp"

#include <cstdint>
#include <string_view>
#include <variant>

namespace parking {

struct SpaceRegistered {
    ParkingSpace space; // all slots vacant
    bool operator==(const SpaceRegistered&) const = default;
};
struct MotoristRegistered {
    Motorist motorist;
    bool operator==(const MotoristRegistered&) const = default;
};
struct CardBound {
    MotoristId motorist_id;
    RfidUid rfid_uid = RfidUid::from("00000000");
    bool operator==(const CardBound&) const = default;
};
struct SlotReserved {
    Reservation reservation;
    bool operator==(const SlotReserved&) const = default;
};
struct ReservationCancelled {
    ReservationId reservation_id;
    bool operator==(const ReservationCancelled&) const = default;
};
struct ReservationExpired {
    ReservationId reservation_id;
    bool operator==(const ReservationExpired&) const = default;
};
struct CheckedIn {
    ParkingSession session; // open
    bool operator==(const CheckedIn&) const = default;
};
struct CheckedOut {
    SessionId session_id;
    Timestamp exit_at;
    Money fee;
    bool operator==(const CheckedOut&) const = default;
};

using EventPayload = std::variant<SpaceRegistered, MotoristRegistered, CardBound, SlotReserved,
                                  ReservationCancelled, ReservationExpired, CheckedIn, CheckedOut>;

/// One entry of the append-only history. Applying records 1..n in order to an
/// empty engine reproduces the state after the original operations.
struct EventRecord {
    std::uint64_t seq = 0;
    Timestamp at;
    EventPayload payload;

    std::string_view kind() const;
    bool operator==(const EventRecord&) const = default;
};

} // namespace parking
