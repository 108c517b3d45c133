#pragma once

// JSON forms of the domain types. Objects are nlohmann::json (std::map
// backed), so dump() emits keys in alphabetical order: the canonical form the
// event log and snapshots rely on.

#include "parking/domain/engine.hpp"
#include "parking/domain/events.hpp"
#include "parking/domain/types.hpp"

#include <nlohmann/json.hpp>

namespace parking {

using json = nlohmann::json;

json timestamp_to_json(Timestamp t);
Timestamp timestamp_from_json(const json& j);

template <typename Tag>
void to_json(json& j, const Id<Tag>& id) {
    j = id.value;
}
template <typename Tag>
void from_json(const json& j, Id<Tag>& id) {
    id.value = j.get<std::string>();
}

void to_json(json& j, const Location& v);
void from_json(const json& j, Location& v);
void to_json(json& j, const AdminContact& v);
void from_json(const json& j, AdminContact& v);
void to_json(json& j, const Tariff& v);
void from_json(const json& j, Tariff& v);
void to_json(json& j, const SlotState& v);
void from_json(const json& j, SlotState& v);
void to_json(json& j, const ParkingSpace& v);
void from_json(const json& j, ParkingSpace& v);
void to_json(json& j, const Motorist& v);
void from_json(const json& j, Motorist& v);
void to_json(json& j, const Reservation& v);
void from_json(const json& j, Reservation& v);
void to_json(json& j, const ParkingSession& v);
void from_json(const json& j, ParkingSession& v);
void to_json(json& j, const AuthDecision& v);
void from_json(const json& j, AuthDecision& v);
void to_json(json& j, const Availability& v);
void to_json(json& j, const EventRecord& v);
void from_json(const json& j, EventRecord& v);

/// Thrown by from_json when a document is well-formed JSON but not a valid
/// encoding of the expected type.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace parking

// RfidUid has no empty state, so it needs the value-returning serializer form.
template <>
struct nlohmann::adl_serializer<parking::RfidUid> {
    static parking::RfidUid from_json(const json& j);
    static void to_json(json& j, const parking::RfidUid& uid);
};
