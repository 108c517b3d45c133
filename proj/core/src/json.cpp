#include "parking/json.hpp"

#include "parking/domain/errors.hpp"

namespace parking {

namespace {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object()) throw SchemaError("expected object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(std::string("missing field \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("field \"") + key + "\": " + e.what());
    }
}

Timestamp ts_field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw SchemaError(std::string("missing field \"") + key + "\"");
    }
    return timestamp_from_json(j.at(key));
}

template <typename E>
E enum_field(const json& j, const char* key, std::optional<E> (*parse)(std::string_view)) {
    const auto text = field<std::string>(j, key);
    auto v = parse(text);
    if (!v) throw SchemaError(std::string("bad value for \"") + key + "\": " + text);
    return *v;
}

} // namespace

json timestamp_to_json(Timestamp t) { return format_iso8601(t); }

Timestamp timestamp_from_json(const json& j) {
    if (!j.is_string()) throw SchemaError("timestamp must be a string");
    auto t = parse_iso8601(j.get_ref<const std::string&>());
    if (!t) throw SchemaError("bad timestamp: " + j.get<std::string>());
    return *t;
}

void to_json(json& j, const Location& v) {
    j = json{{"lat", v.latitude}, {"lon", v.longitude}};
}
void from_json(const json& j, Location& v) {
    v.latitude = field<double>(j, "lat");
    v.longitude = field<double>(j, "lon");
}

void to_json(json& j, const AdminContact& v) {
    j = json{{"name", v.name}, {"contact", v.contact}};
}
void from_json(const json& j, AdminContact& v) {
    v.name = field<std::string>(j, "name");
    v.contact = field<std::string>(j, "contact");
}

void to_json(json& j, const Tariff& v) {
    j = json{{"free", v.free},
             {"rate_per_unit", v.rate_per_unit.minor},
             {"billing_unit_minutes", v.billing_unit.count()},
             {"free_minutes", v.free_minutes.count()}};
}
void from_json(const json& j, Tariff& v) {
    v.free = field<bool>(j, "free");
    v.rate_per_unit = Money{field<std::int64_t>(j, "rate_per_unit")};
    v.billing_unit = std::chrono::minutes{field<std::int64_t>(j, "billing_unit_minutes")};
    v.free_minutes = std::chrono::minutes{field<std::int64_t>(j, "free_minutes")};
}

void to_json(json& j, const SlotState& v) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Vacant>) {
                j = json{{"state", "vacant"}};
            } else if constexpr (std::is_same_v<T, Reserved>) {
                j = json{{"state", "reserved"},
                         {"reservation_id", s.reservation_id},
                         {"reserved_at", timestamp_to_json(s.reserved_at)},
                         {"expires_at", timestamp_to_json(s.expires_at)}};
            } else {
                j = json{{"state", "occupied"},
                         {"session_id", s.session_id},
                         {"checked_in_at", timestamp_to_json(s.checked_in_at)}};
            }
        },
        v);
}
void from_json(const json& j, SlotState& v) {
    switch (enum_field<SlotKind>(j, "state", parse_slot_kind)) {
    case SlotKind::Vacant: v = Vacant{}; break;
    case SlotKind::Reserved:
        v = Reserved{field<ReservationId>(j, "reservation_id"), ts_field(j, "reserved_at"),
                     ts_field(j, "expires_at")};
        break;
    case SlotKind::Occupied:
        v = Occupied{field<SessionId>(j, "session_id"), ts_field(j, "checked_in_at")};
        break;
    }
}

void to_json(json& j, const ParkingSpace& v) {
    const auto counts = count_slots(v);
    j = json{{"space_id", v.space_id},
             {"name", v.name},
             {"location", v.location},
             {"admin", v.admin},
             {"tariff", v.tariff},
             {"currency", v.currency},
             {"device_token", v.device_token},
             {"capacity", v.capacity()},
             {"vacant", counts.vacant},
             {"reserved", counts.reserved},
             {"occupied", counts.occupied},
             {"slots", v.slots}};
}
void from_json(const json& j, ParkingSpace& v) {
    v.space_id = field<SpaceId>(j, "space_id");
    v.name = field<std::string>(j, "name");
    v.location = field<Location>(j, "location");
    v.admin = field<AdminContact>(j, "admin");
    v.tariff = field<Tariff>(j, "tariff");
    v.currency = field<std::string>(j, "currency");
    v.device_token = field<std::string>(j, "device_token");
    v.slots = field<std::vector<SlotState>>(j, "slots");
    if (field<std::size_t>(j, "capacity") != v.slots.size()) {
        throw SchemaError("space " + v.space_id.value + ": capacity does not match slots");
    }
    const auto counts = count_slots(v);
    if (field<std::size_t>(j, "vacant") != counts.vacant ||
        field<std::size_t>(j, "reserved") != counts.reserved ||
        field<std::size_t>(j, "occupied") != counts.occupied) {
        throw SchemaError("space " + v.space_id.value + ": stored counts disagree with slots");
    }
}

void to_json(json& j, const Motorist& v) {
    j = json{{"motorist_id", v.motorist_id}, {"full_name", v.full_name},
             {"nationality", v.nationality}, {"national_id", v.national_id},
             {"contact", v.contact},         {"rfid_uid", v.rfid_uid},
             {"access_token", v.access_token}};
}
void from_json(const json& j, Motorist& v) {
    v.motorist_id = field<MotoristId>(j, "motorist_id");
    v.full_name = field<std::string>(j, "full_name");
    v.nationality = field<std::string>(j, "nationality");
    v.national_id = field<std::string>(j, "national_id");
    v.contact = field<std::string>(j, "contact");
    v.rfid_uid = field<RfidUid>(j, "rfid_uid");
    v.access_token = field<std::string>(j, "access_token");
}

void to_json(json& j, const Reservation& v) {
    j = json{{"reservation_id", v.reservation_id},
             {"space_id", v.space_id},
             {"slot_no", v.slot_no},
             {"motorist_id", v.motorist_id},
             {"rfid_uid", v.rfid_uid},
             {"reserved_at", timestamp_to_json(v.reserved_at)},
             {"expires_at", timestamp_to_json(v.expires_at)},
             {"status", to_string(v.status)}};
}
void from_json(const json& j, Reservation& v) {
    v.reservation_id = field<ReservationId>(j, "reservation_id");
    v.space_id = field<SpaceId>(j, "space_id");
    v.slot_no = field<SlotNo>(j, "slot_no");
    v.motorist_id = field<MotoristId>(j, "motorist_id");
    v.rfid_uid = field<RfidUid>(j, "rfid_uid");
    v.reserved_at = ts_field(j, "reserved_at");
    v.expires_at = ts_field(j, "expires_at");
    v.status = enum_field<ReservationStatus>(j, "status", parse_reservation_status);
}

void to_json(json& j, const ParkingSession& v) {
    j = json{{"session_id", v.session_id},
             {"reservation_id", v.reservation_id ? json(*v.reservation_id) : json(nullptr)},
             {"space_id", v.space_id},
             {"slot_no", v.slot_no},
             {"motorist_id", v.motorist_id},
             {"rfid_uid", v.rfid_uid},
             {"entry_at", timestamp_to_json(v.entry_at)},
             {"exit_at", v.exit_at ? timestamp_to_json(*v.exit_at) : json(nullptr)},
             {"fee", v.fee ? json(v.fee->minor) : json(nullptr)}};
}
void from_json(const json& j, ParkingSession& v) {
    v.session_id = field<SessionId>(j, "session_id");
    const auto& rid = j.at("reservation_id");
    v.reservation_id = rid.is_null() ? std::nullopt : std::optional{rid.get<ReservationId>()};
    v.space_id = field<SpaceId>(j, "space_id");
    v.slot_no = field<SlotNo>(j, "slot_no");
    v.motorist_id = field<MotoristId>(j, "motorist_id");
    v.rfid_uid = field<RfidUid>(j, "rfid_uid");
    v.entry_at = ts_field(j, "entry_at");
    const auto& exit = j.at("exit_at");
    v.exit_at = exit.is_null() ? std::nullopt : std::optional{timestamp_from_json(exit)};
    const auto& fee = j.at("fee");
    v.fee = fee.is_null() ? std::nullopt : std::optional{Money{fee.get<std::int64_t>()}};
    if (v.exit_at.has_value() != v.fee.has_value()) {
        throw SchemaError("session " + v.session_id.value + ": fee present iff exit present");
    }
    if (v.exit_at && *v.exit_at < v.entry_at) {
        throw SchemaError("session " + v.session_id.value + ": exit before entry");
    }
}

void to_json(json& j, const AuthDecision& v) {
    if (const auto* a = std::get_if<Accepted>(&v)) {
        j = json{{"outcome", "accepted"},
                 {"action", to_string(a->action)},
                 {"display_text", a->display_text}};
    } else {
        const auto& r = std::get<Rejected>(v);
        j = json{{"outcome", "rejected"},
                 {"reason", to_string(r.reason)},
                 {"display_text", r.display_text}};
    }
}
void from_json(const json& j, AuthDecision& v) {
    const auto outcome = field<std::string>(j, "outcome");
    auto text = field<std::string>(j, "display_text");
    if (text.empty()) throw SchemaError("display_text must be non-empty");
    if (outcome == "accepted") {
        v = Accepted{enum_field<GateAction>(j, "action", parse_gate_action), std::move(text)};
    } else if (outcome == "rejected") {
        v = Rejected{enum_field<RejectReason>(j, "reason", parse_reject_reason), std::move(text)};
    } else {
        throw SchemaError("bad outcome: " + outcome);
    }
}

void to_json(json& j, const Availability& v) {
    j = json{{"vacant", v.vacant}, {"reserved", v.reserved}, {"occupied", v.occupied}};
}

void to_json(json& j, const EventRecord& v) {
    json payload = std::visit(
        [](const auto& e) -> json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, SpaceRegistered>) {
                return json{{"space", e.space}};
            } else if constexpr (std::is_same_v<T, MotoristRegistered>) {
                return json{{"motorist", e.motorist}};
            } else if constexpr (std::is_same_v<T, CardBound>) {
                return json{{"motorist_id", e.motorist_id}, {"rfid_uid", e.rfid_uid}};
            } else if constexpr (std::is_same_v<T, SlotReserved>) {
                return json{{"reservation", e.reservation}};
            } else if constexpr (std::is_same_v<T, ReservationCancelled> ||
                                 std::is_same_v<T, ReservationExpired>) {
                return json{{"reservation_id", e.reservation_id}};
            } else if constexpr (std::is_same_v<T, CheckedIn>) {
                return json{{"session", e.session}};
            } else {
                return json{{"session_id", e.session_id},
                            {"exit_at", timestamp_to_json(e.exit_at)},
                            {"fee", e.fee.minor}};
            }
        },
        v.payload);
    j = json{{"seq", v.seq},
             {"timestamp", timestamp_to_json(v.at)},
             {"kind", v.kind()},
             {"payload", std::move(payload)}};
}

void from_json(const json& j, EventRecord& v) {
    v.seq = field<std::uint64_t>(j, "seq");
    v.at = ts_field(j, "timestamp");
    const auto kind = field<std::string>(j, "kind");
    const json& p = j.at("payload");
    if (kind == "space_registered") {
        v.payload = SpaceRegistered{field<ParkingSpace>(p, "space")};
    } else if (kind == "motorist_registered") {
        v.payload = MotoristRegistered{field<Motorist>(p, "motorist")};
    } else if (kind == "card_bound") {
        v.payload = CardBound{field<MotoristId>(p, "motorist_id"), field<RfidUid>(p, "rfid_uid")};
    } else if (kind == "slot_reserved") {
        v.payload = SlotReserved{field<Reservation>(p, "reservation")};
    } else if (kind == "reservation_cancelled") {
        v.payload = ReservationCancelled{field<ReservationId>(p, "reservation_id")};
    } else if (kind == "reservation_expired") {
        v.payload = ReservationExpired{field<ReservationId>(p, "reservation_id")};
    } else if (kind == "checked_in") {
        v.payload = CheckedIn{field<ParkingSession>(p, "session")};
    } else if (kind == "checked_out") {
        v.payload = CheckedOut{field<SessionId>(p, "session_id"), ts_field(p, "exit_at"),
                               Money{field<std::int64_t>(p, "fee")}};
    } else {
        throw SchemaError("unknown event kind: " + kind);
    }
}

} // namespace parking

parking::RfidUid nlohmann::adl_serializer<parking::RfidUid>::from_json(const json& j) {
    if (!j.is_string()) throw parking::SchemaError("rfid uid must be a string");
    const auto& text = j.get_ref<const std::string&>();
    auto parsed = parking::RfidUid::parse(text);
    if (!parsed || parsed->str() != text) {
        throw parking::SchemaError("rfid uid not canonical: " + text);
    }
    return *parsed;
}

void nlohmann::adl_serializer<parking::RfidUid>::to_json(json& j, const parking::RfidUid& uid) {
    j = uid.str();
}
