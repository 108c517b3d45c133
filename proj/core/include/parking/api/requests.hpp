#pragma once

#include "parking/domain/engine.hpp"
#include "parking/json.hpp"

namespace parking::api {

// Request bodies shared by the HTTP API, the CLI and scenario scripts.
// Shapes:
//   space:    {"name", "capacity", "location": {"lat","lon"},
//              "admin": {"name","contact"}?, "tariff"?, "currency"?}
//   tariff:   absent or {"free": true} for a free lot, otherwise
//             {"rate_per_unit", "billing_unit_minutes"? (60), "free_minutes"? (0)}
//   motorist: {"full_name", "national_id", "rfid_uid", "nationality"?, "contact"?}
// Throw SchemaError on shape problems; value checks happen in the engine.

SpaceSpec space_spec_from_json(const json& j);
json to_request_json(const SpaceSpec& spec);
Tariff tariff_from_request(const json& j);
MotoristProfile motorist_profile_from_json(const json& j);
json to_request_json(const MotoristProfile& profile);

} // namespace parking::api
