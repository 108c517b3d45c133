#include "parking/api/requests.hpp"

namespace parking::api {

namespace {

const json& member(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(std::string("missing field \"") + key + "\"");
    return *it;
}

std::string text(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_string()) throw SchemaError(std::string("\"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::string text_or(const json& j, const char* key, std::string fallback) {
    return j.contains(key) ? text(j, key) : fallback;
}

std::int64_t integer(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_number_integer()) throw SchemaError(std::string("\"") + key + "\" must be an integer");
    return v.get<std::int64_t>();
}

double number(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_number()) throw SchemaError(std::string("\"") + key + "\" must be a number");
    return v.get<double>();
}

void require_object(const json& j, const char* what) {
    if (!j.is_object()) throw SchemaError(std::string(what) + " must be a JSON object");
}

} // namespace

Tariff tariff_from_request(const json& j) {
    if (j.is_null()) return Tariff::free_of_charge();
    require_object(j, "tariff");
    if (j.contains("free")) {
        const json& f = j.at("free");
        if (!f.is_boolean()) throw SchemaError("\"free\" must be a boolean");
        if (f.get<bool>()) return Tariff::free_of_charge();
    }
    const std::int64_t unit = j.contains("billing_unit_minutes") ? integer(j, "billing_unit_minutes") : 60;
    const std::int64_t free_min = j.contains("free_minutes") ? integer(j, "free_minutes") : 0;
    return Tariff::paid(Money{integer(j, "rate_per_unit")}, std::chrono::minutes{unit},
                        std::chrono::minutes{free_min});
}

SpaceSpec space_spec_from_json(const json& j) {
    require_object(j, "space");
    SpaceSpec s;
    s.name = text(j, "name");
    s.capacity = integer(j, "capacity");
    const json& loc = member(j, "location");
    require_object(loc, "location");
    s.location = Location{number(loc, "lat"), number(loc, "lon")};
    if (j.contains("admin")) {
        const json& a = j.at("admin");
        require_object(a, "admin");
        s.admin = AdminContact{text_or(a, "name", ""), text_or(a, "contact", "")};
    }
    s.tariff = tariff_from_request(j.contains("tariff") ? j.at("tariff") : json());
    s.currency = text_or(j, "currency", s.currency);
    s.device_token = text_or(j, "device_token", "");
    return s;
}

json to_request_json(const SpaceSpec& spec) {
    json j{{"name", spec.name},
           {"capacity", spec.capacity},
           {"location", spec.location},
           {"admin", spec.admin},
           {"currency", spec.currency}};
    if (spec.tariff.free) {
        j["tariff"] = json{{"free", true}};
    } else {
        j["tariff"] = json{{"rate_per_unit", spec.tariff.rate_per_unit.minor},
                           {"billing_unit_minutes", spec.tariff.billing_unit.count()},
                           {"free_minutes", spec.tariff.free_minutes.count()}};
    }
    if (!spec.device_token.empty()) j["device_token"] = spec.device_token;
    return j;
}

MotoristProfile motorist_profile_from_json(const json& j) {
    require_object(j, "motorist");
    MotoristProfile p;
    p.full_name = text(j, "full_name");
    p.national_id = text(j, "national_id");
    p.rfid_uid = text(j, "rfid_uid");
    p.nationality = text_or(j, "nationality", "");
    p.contact = text_or(j, "contact", "");
    return p;
}

json to_request_json(const MotoristProfile& p) {
    return json{{"full_name", p.full_name},
                {"national_id", p.national_id},
                {"rfid_uid", p.rfid_uid},
                {"nationality", p.nationality},
                {"contact", p.contact}};
}

} // namespace parking::api
