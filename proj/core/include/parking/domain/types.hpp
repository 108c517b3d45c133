#pragma once

#include "parking/time.hpp"

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace parking {

/// Opaque identifier with a tag so space, motorist, reservation and session
/// ids cannot be mixed up.
template <typename Tag>
struct Id {
    std::string value;

    Id() = default;
    explicit Id(std::string v) : value(std::move(v)) {}

    bool empty() const { return value.empty(); }
    auto operator<=>(const Id&) const = default;
};

using SpaceId = Id<struct SpaceTag>;
using MotoristId = Id<struct MotoristTag>;
using ReservationId = Id<struct ReservationTag>;
using SessionId = Id<struct SessionTag>;

/// 1-based slot index within a space.
using SlotNo = std::uint32_t;

/// Integer minor currency units.
struct Money {
    std::int64_t minor = 0;
    auto operator<=>(const Money&) const = default;
};

struct Location {
    double latitude = 0.0;
    double longitude = 0.0;
    bool operator==(const Location&) const = default;
};

struct AdminContact {
    std::string name;
    std::string contact;
    bool operator==(const AdminContact&) const = default;
};

struct Tariff {
    bool free = true;
    Money rate_per_unit{};
    std::chrono::minutes billing_unit{60};
    std::chrono::minutes free_minutes{0};

    static Tariff free_of_charge() { return Tariff{}; }
    static Tariff paid(Money rate, std::chrono::minutes unit, std::chrono::minutes free_time) {
        return Tariff{false, rate, unit, free_time};
    }

    bool operator==(const Tariff&) const = default;
};

/// Canonical RFID tag identifier: 4 to 10 bytes, rendered as uppercase hex.
class RfidUid {
public:
    static constexpr std::size_t kMinBytes = 4;
    static constexpr std::size_t kMaxBytes = 10;

    /// Case-insensitive; ':', '-' and ' ' separators are stripped.
    static std::optional<RfidUid> parse(std::string_view text);
    /// Throws DomainError(MalformedUid).
    static RfidUid from(std::string_view text);

    const std::string& str() const { return hex_; }
    std::size_t byte_length() const { return hex_.size() / 2; }

    auto operator<=>(const RfidUid&) const = default;

private:
    explicit RfidUid(std::string hex) : hex_(std::move(hex)) {}
    std::string hex_;
};

// Slot lifecycle: Vacant -> Reserved -> {Vacant, Occupied}; Occupied -> Vacant.
struct Vacant {
    bool operator==(const Vacant&) const = default;
};
struct Reserved {
    ReservationId reservation_id;
    Timestamp reserved_at;
    Timestamp expires_at;
    bool operator==(const Reserved&) const = default;
};
struct Occupied {
    SessionId session_id;
    Timestamp checked_in_at;
    bool operator==(const Occupied&) const = default;
};
using SlotState = std::variant<Vacant, Reserved, Occupied>;

enum class SlotKind { Vacant, Reserved, Occupied };
SlotKind kind_of(const SlotState& s);
std::string_view to_string(SlotKind k);
std::optional<SlotKind> parse_slot_kind(std::string_view text);

struct ParkingSpace {
    SpaceId space_id;
    std::string name;
    Location location;
    AdminContact admin;
    Tariff tariff;
    std::string currency;
    std::string device_token;
    std::vector<SlotState> slots;

    std::size_t capacity() const { return slots.size(); }
    bool operator==(const ParkingSpace&) const = default;
};

struct Motorist {
    MotoristId motorist_id;
    std::string full_name;
    std::string nationality;
    std::string national_id;
    std::string contact;
    RfidUid rfid_uid = RfidUid::from("00000000");
    std::string access_token;
    bool operator==(const Motorist&) const = default;
};

enum class ReservationStatus { Active, Cancelled, Expired, Converted };
std::string_view to_string(ReservationStatus s);
std::optional<ReservationStatus> parse_reservation_status(std::string_view text);

struct Reservation {
    ReservationId reservation_id;
    SpaceId space_id;
    SlotNo slot_no = 0;
    MotoristId motorist_id;
    RfidUid rfid_uid = RfidUid::from("00000000");
    Timestamp reserved_at;
    Timestamp expires_at;
    ReservationStatus status = ReservationStatus::Active;
    bool operator==(const Reservation&) const = default;
};

struct ParkingSession {
    SessionId session_id;
    std::optional<ReservationId> reservation_id; // empty for walk-in entries
    SpaceId space_id;
    SlotNo slot_no = 0;
    MotoristId motorist_id;
    RfidUid rfid_uid = RfidUid::from("00000000");
    Timestamp entry_at;
    std::optional<Timestamp> exit_at;
    std::optional<Money> fee;

    bool open() const { return !exit_at.has_value(); }
    bool operator==(const ParkingSession&) const = default;
};

enum class GateAction { OpenEntry, OpenExit };
enum class RejectReason {
    UnknownCard,
    NoReservation,
    ReservationExpired,
    AlreadyInside,
    NotInside,
    NoVacancy,
};
std::string_view to_string(GateAction a);
std::string_view to_string(RejectReason r);
std::optional<GateAction> parse_gate_action(std::string_view text);
std::optional<RejectReason> parse_reject_reason(std::string_view text);

namespace display {
inline constexpr std::string_view kGranted = "ACCESS GRANTED";
inline constexpr std::string_view kDenied = "ACCESS DENIED";
inline constexpr std::string_view kTryAgain = "TRY AGAIN";
inline constexpr std::string_view kWelcome = "WELCOME";
} // namespace display

struct Accepted {
    GateAction action = GateAction::OpenEntry;
    std::string display_text{display::kGranted};
    bool operator==(const Accepted&) const = default;
};
struct Rejected {
    RejectReason reason = RejectReason::UnknownCard;
    std::string display_text{display::kDenied};
    bool operator==(const Rejected&) const = default;
};
using AuthDecision = std::variant<Accepted, Rejected>;

inline bool is_accepted(const AuthDecision& d) { return std::holds_alternative<Accepted>(d); }
inline const std::string& display_text(const AuthDecision& d) {
    return std::visit([](const auto& v) -> const std::string& { return v.display_text; }, d);
}

/// Result of a gate authentication at check-in or check-out.
struct GateOutcome {
    AuthDecision decision;
    std::optional<ParkingSession> session;
};

struct Availability {
    std::size_t vacant = 0;
    std::size_t reserved = 0;
    std::size_t occupied = 0;
    bool operator==(const Availability&) const = default;
};

enum class ChangeCause { Reserved, Cancelled, Expired, CheckedIn, CheckedOut };
std::string_view to_string(ChangeCause c);
std::optional<ChangeCause> parse_change_cause(std::string_view text);

/// One slot transition, emitted after the engine applies an event.
struct StateChange {
    SpaceId space_id;
    SlotNo slot_no = 0;
    SlotState old_state;
    SlotState new_state;
    ChangeCause cause = ChangeCause::Reserved;
    Timestamp at;
    std::optional<MotoristId> holder; // motorist behind the new state, if any
    bool operator==(const StateChange&) const = default;
};

/// Colour shown for a slot: vacant green, reserved orange, occupied red.
std::string_view slot_color(SlotKind k);

} // namespace parking
