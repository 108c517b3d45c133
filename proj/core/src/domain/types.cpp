#include "parking/domain/types.hpp"

#include "parking/domain/errors.hpp"

#include <array>
#include <utility>

namespace parking {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view text) {
    for (const auto& [value, name] : table) {
        if (name == text) return value;
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

constexpr std::array<std::pair<SlotKind, std::string_view>, 3> kSlotKinds{{
    {SlotKind::Vacant, "vacant"},
    {SlotKind::Reserved, "reserved"},
    {SlotKind::Occupied, "occupied"},
}};

constexpr std::array<std::pair<ReservationStatus, std::string_view>, 4> kStatuses{{
    {ReservationStatus::Active, "active"},
    {ReservationStatus::Cancelled, "cancelled"},
    {ReservationStatus::Expired, "expired"},
    {ReservationStatus::Converted, "converted"},
}};

constexpr std::array<std::pair<GateAction, std::string_view>, 2> kActions{{
    {GateAction::OpenEntry, "gate_open_entry"},
    {GateAction::OpenExit, "gate_open_exit"},
}};

constexpr std::array<std::pair<RejectReason, std::string_view>, 6> kReasons{{
    {RejectReason::UnknownCard, "unknown_card"},
    {RejectReason::NoReservation, "no_reservation"},
    {RejectReason::ReservationExpired, "reservation_expired"},
    {RejectReason::AlreadyInside, "already_inside"},
    {RejectReason::NotInside, "not_inside"},
    {RejectReason::NoVacancy, "no_vacancy"},
}};

constexpr std::array<std::pair<ChangeCause, std::string_view>, 5> kCauses{{
    {ChangeCause::Reserved, "reserved"},
    {ChangeCause::Cancelled, "cancelled"},
    {ChangeCause::Expired, "expired"},
    {ChangeCause::CheckedIn, "checked_in"},
    {ChangeCause::CheckedOut, "checked_out"},
}};

constexpr std::array<std::pair<ErrorCode, std::string_view>, 17> kErrors{{
    {ErrorCode::InvalidCapacity, "InvalidCapacity"},
    {ErrorCode::InvalidCoordinates, "InvalidCoordinates"},
    {ErrorCode::InvalidTariff, "InvalidTariff"},
    {ErrorCode::InvalidProfile, "InvalidProfile"},
    {ErrorCode::MalformedUid, "MalformedUid"},
    {ErrorCode::DuplicateCredential, "DuplicateCredential"},
    {ErrorCode::DuplicateNationalId, "DuplicateNationalId"},
    {ErrorCode::UnknownSpace, "UnknownSpace"},
    {ErrorCode::UnknownSlot, "UnknownSlot"},
    {ErrorCode::UnknownMotorist, "UnknownMotorist"},
    {ErrorCode::UnknownReservation, "UnknownReservation"},
    {ErrorCode::SlotNotVacant, "SlotNotVacant"},
    {ErrorCode::MotoristHasActiveClaim, "MotoristHasActiveClaim"},
    {ErrorCode::NotActive, "NotActive"},
    {ErrorCode::NotOwner, "NotOwner"},
    {ErrorCode::NegativeDuration, "NegativeDuration"},
    {ErrorCode::InvalidEvent, "InvalidEvent"},
}};

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::optional<RfidUid> RfidUid::parse(std::string_view text) {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string hex;
    hex.reserve(text.size());
    for (char c : text) {
        if (c == ':' || c == '-' || c == ' ') continue;
        const int v = hex_value(c);
        if (v < 0) return std::nullopt;
        hex.push_back(kDigits[v]);
    }
    if (hex.size() % 2 != 0) return std::nullopt;
    const auto bytes = hex.size() / 2;
    if (bytes < kMinBytes || bytes > kMaxBytes) return std::nullopt;
    return RfidUid{std::move(hex)};
}

RfidUid RfidUid::from(std::string_view text) {
    auto uid = parse(text);
    if (!uid) throw DomainError(ErrorCode::MalformedUid, std::string(text));
    return *std::move(uid);
}

SlotKind kind_of(const SlotState& s) {
    switch (s.index()) {
    case 0: return SlotKind::Vacant;
    case 1: return SlotKind::Reserved;
    default: return SlotKind::Occupied;
    }
}

std::string_view to_string(SlotKind k) { return name_of(kSlotKinds, k); }
std::optional<SlotKind> parse_slot_kind(std::string_view t) { return lookup(kSlotKinds, t); }

std::string_view to_string(ReservationStatus s) { return name_of(kStatuses, s); }
std::optional<ReservationStatus> parse_reservation_status(std::string_view t) {
    return lookup(kStatuses, t);
}

std::string_view to_string(GateAction a) { return name_of(kActions, a); }
std::optional<GateAction> parse_gate_action(std::string_view t) { return lookup(kActions, t); }

std::string_view to_string(RejectReason r) { return name_of(kReasons, r); }
std::optional<RejectReason> parse_reject_reason(std::string_view t) {
    return lookup(kReasons, t);
}

std::string_view to_string(ChangeCause c) { return name_of(kCauses, c); }
std::optional<ChangeCause> parse_change_cause(std::string_view t) { return lookup(kCauses, t); }

std::string_view to_string(ErrorCode code) { return name_of(kErrors, code); }

std::string_view slot_color(SlotKind k) {
    switch (k) {
    case SlotKind::Vacant: return "green";
    case SlotKind::Reserved: return "orange";
    case SlotKind::Occupied: return "red";
    }
    return "green";
}

} // namespace parking
