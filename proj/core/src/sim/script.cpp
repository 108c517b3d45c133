#include "parking/sim/script.hpp"

#include "parking/api/requests.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace parking::sim {

namespace {

struct Ctx {
    std::string where;

    [[noreturn]] void fail(const std::string& msg) const { throw ScriptError(where + ": " + msg); }

    const json& get(const json& j, const char* key) const {
        if (!j.is_object()) fail("expected an object");
        auto it = j.find(key);
        if (it == j.end()) fail(std::string("missing \"") + key + "\"");
        return *it;
    }
    std::string str(const json& j, const char* key) const {
        const json& v = get(j, key);
        if (!v.is_string()) fail(std::string("\"") + key + "\" must be a string");
        return v.get<std::string>();
    }
    std::int64_t integer(const json& j, const char* key) const {
        const json& v = get(j, key);
        if (!v.is_number_integer()) fail(std::string("\"") + key + "\" must be an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer_or(const json& j, const char* key, std::int64_t fallback) const {
        return j.contains(key) ? integer(j, key) : fallback;
    }
    Duration ms(const json& j, const char* key) const {
        const auto v = integer(j, key);
        if (v < 0) fail(std::string("\"") + key + "\" must not be negative");
        return Duration{v};
    }
    Duration ms_or(const json& j, const char* key, Duration fallback) const {
        return j.contains(key) ? ms(j, key) : fallback;
    }
    link::Lane lane(const json& j) const {
        auto l = link::parse_lane(str(j, "lane"));
        if (!l) fail("lane must be \"entry\" or \"exit\"");
        return *l;
    }
    RfidUid uid(const json& j, const char* key) const {
        auto u = RfidUid::parse(str(j, key));
        if (!u) fail("malformed rfid uid");
        return *u;
    }
};

std::optional<GateState> parse_gate_state(std::string_view s) {
    for (auto g : {GateState::Closed, GateState::Opening, GateState::Open, GateState::Closing}) {
        if (to_string(g) == s) return g;
    }
    return std::nullopt;
}

SimConfig parse_config(const json& j, const Ctx& c) {
    SimConfig cfg;
    if (j.is_null()) return cfg;
    if (!j.is_object()) c.fail("expected an object");
    cfg.gate.open_for = c.ms_or(j, "gate_open_ms", cfg.gate.open_for);
    cfg.gate.travel = c.ms_or(j, "gate_travel_ms", cfg.gate.travel);
    cfg.auth_timeout = c.ms_or(j, "auth_timeout_ms", cfg.auth_timeout);
    cfg.heartbeat_interval = c.ms_or(j, "heartbeat_ms", cfg.heartbeat_interval);
    cfg.retransmit_after = c.ms_or(j, "retransmit_ms", cfg.retransmit_after);
    cfg.lcd_hold = c.ms_or(j, "lcd_hold_ms", cfg.lcd_hold);
    cfg.buffer_capacity = static_cast<std::size_t>(
        c.integer_or(j, "buffer_capacity", static_cast<std::int64_t>(cfg.buffer_capacity)));
    if (j.contains("reservation_ttl_min")) {
        cfg.engine.reservation_ttl = std::chrono::minutes{c.integer(j, "reservation_ttl_min")};
    }
    if (j.contains("allow_walk_in")) {
        const json& w = j.at("allow_walk_in");
        if (!w.is_boolean()) c.fail("\"allow_walk_in\" must be a boolean");
        cfg.engine.allow_walk_in = w.get<bool>();
    }
    if (cfg.heartbeat_interval.count() <= 0 || cfg.retransmit_after.count() <= 0 ||
        cfg.buffer_capacity == 0) {
        c.fail("heartbeat_ms, retransmit_ms and buffer_capacity must be positive");
    }
    return cfg;
}

ActionBody parse_body(const json& j, const Ctx& c) {
    const std::string type = c.str(j, "type");
    if (type == "card_tap") {
        CardTap a{c.str(j, "space"), c.lane(j), c.uid(j, "uid")};
        a.retry = c.ms_or(j, "retry_ms", Duration{0});
        a.max_attempts = static_cast<int>(c.integer_or(j, "max_attempts", 1));
        if (a.max_attempts < 1) c.fail("max_attempts must be at least 1");
        return a;
    }
    if (type == "partition") return Partition{c.str(j, "space"), c.ms(j, "duration_ms")};
    if (type == "delay") return Delay{c.str(j, "space"), c.ms(j, "latency_ms")};
    if (type == "drop_next") {
        DropNext a{c.str(j, "space"), static_cast<int>(c.integer_or(j, "n", 1)), Direction::Down};
        const std::string dir = j.contains("direction") ? c.str(j, "direction") : "down";
        if (dir == "up") {
            a.direction = Direction::Up;
        } else if (dir != "down") {
            c.fail("direction must be \"up\" or \"down\"");
        }
        if (a.n < 0) c.fail("n must not be negative");
        return a;
    }
    if (type == "advance_time") return AdvanceTime{c.ms(j, "duration_ms")};
    if (type == "reserve") {
        Reserve a{c.str(j, "motorist"), c.str(j, "space"), 0, std::nullopt};
        const auto slot = c.integer(j, "slot");
        if (slot < 1) c.fail("slot must be at least 1");
        a.slot = static_cast<SlotNo>(slot);
        if (j.contains("expect_error")) a.expect_error = c.str(j, "expect_error");
        return a;
    }
    if (type == "cancel") return Cancel{c.str(j, "motorist")};
    if (type == "expect_slot") {
        ExpectSlot a{c.str(j, "space"), 0, SlotKind::Vacant, std::nullopt};
        a.slot = static_cast<SlotNo>(c.integer(j, "slot"));
        auto st = parse_slot_kind(c.str(j, "state"));
        if (!st) c.fail("state must be vacant, reserved or occupied");
        a.state = *st;
        if (j.contains("holder")) a.holder = c.str(j, "holder");
        return a;
    }
    if (type == "expect_gate") {
        auto st = parse_gate_state(c.str(j, "state"));
        if (!st) c.fail("unknown gate state");
        return ExpectGate{c.str(j, "space"), c.lane(j), *st};
    }
    if (type == "expect_lcd") return ExpectLcd{c.str(j, "space"), c.lane(j), c.str(j, "text")};
    if (type == "expect_buffer") {
        return ExpectBuffer{c.str(j, "space"), static_cast<std::size_t>(c.integer(j, "size"))};
    }
    c.fail("unknown action type \"" + type + "\"");
}

} // namespace

std::string_view action_type(const ActionBody& body) {
    static constexpr std::string_view names[] = {
        "card_tap", "partition",   "delay",      "drop_next",  "advance_time", "reserve",
        "cancel",   "expect_slot", "expect_gate", "expect_lcd", "expect_buffer"};
    return names[body.index()];
}

ScenarioScript parse_script(const json& j) {
    Ctx top{"script"};
    if (!j.is_object()) top.fail("expected an object");
    ScenarioScript s;
    if (j.contains("seed")) {
        const json& seed = j.at("seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
            top.fail("\"seed\" must be a non-negative integer");
        s.seed = seed.get<std::uint64_t>();
    }
    if (j.contains("start")) {
        auto t = parse_iso8601(top.str(j, "start"));
        if (!t) top.fail("\"start\" must be an ISO-8601 UTC timestamp");
        s.start = *t;
    }
    s.config = parse_config(j.contains("config") ? j.at("config") : json(), Ctx{"config"});

    if (j.contains("setup")) {
        const json& setup = j.at("setup");
        Ctx c{"setup"};
        if (!setup.is_object()) c.fail("expected an object");
        if (setup.contains("spaces")) {
            std::size_t i = 0;
            for (const auto& sp : setup.at("spaces")) {
                Ctx sc{"setup.spaces[" + std::to_string(i++) + "]"};
                try {
                    s.spaces.push_back({sc.str(sp, "key"), api::space_spec_from_json(sp)});
                } catch (const SchemaError& e) {
                    sc.fail(e.what());
                }
            }
        }
        if (setup.contains("motorists")) {
            std::size_t i = 0;
            for (const auto& m : setup.at("motorists")) {
                Ctx mc{"setup.motorists[" + std::to_string(i++) + "]"};
                try {
                    s.motorists.push_back({mc.str(m, "key"), api::motorist_profile_from_json(m)});
                } catch (const SchemaError& e) {
                    mc.fail(e.what());
                }
            }
        }
        if (setup.contains("unregistered_cards")) {
            for (const auto& u : setup.at("unregistered_cards")) {
                auto uid = u.is_string() ? RfidUid::parse(u.get<std::string>()) : std::nullopt;
                if (!uid) c.fail("malformed entry in unregistered_cards");
                s.unregistered_cards.push_back(*uid);
            }
        }
    }

    if (j.contains("actions")) {
        const json& actions = j.at("actions");
        if (!actions.is_array()) top.fail("\"actions\" must be an array");
        std::size_t i = 0;
        for (const auto& a : actions) {
            Ctx c{"actions[" + std::to_string(i++) + "]"};
            const auto at = c.integer(a, "at");
            s.actions.push_back(Action{at, parse_body(a, c)});
        }
    }
    validate(s);
    return s;
}

ScenarioScript load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScriptError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw ScriptError(path.string() + ": not valid JSON");
    return parse_script(j);
}

void validate(const ScenarioScript& s) {
    std::set<std::string> spaces, motorists;
    std::set<RfidUid> cards;
    for (const auto& sp : s.spaces) {
        if (!spaces.insert(sp.key).second) throw ScriptError("duplicate space key \"" + sp.key + "\"");
    }
    for (const auto& m : s.motorists) {
        if (!motorists.insert(m.key).second) {
            throw ScriptError("duplicate motorist key \"" + m.key + "\"");
        }
        auto uid = RfidUid::parse(m.profile.rfid_uid);
        if (uid) cards.insert(*uid);
    }
    cards.insert(s.unregistered_cards.begin(), s.unregistered_cards.end());

    std::int64_t last = 0;
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
        const Action& a = s.actions[i];
        const std::string where = "actions[" + std::to_string(i) + "] (" +
                                  std::string(action_type(a.body)) + ")";
        if (a.at_ms < last) throw ScriptError(where + ": time goes backwards");
        last = a.at_ms;
        auto need_space = [&](const std::string& key) {
            if (!spaces.count(key)) throw ScriptError(where + ": unknown space \"" + key + "\"");
        };
        auto need_motorist = [&](const std::string& key) {
            if (!motorists.count(key)) throw ScriptError(where + ": unknown motorist \"" + key + "\"");
        };
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, AdvanceTime>) {
                } else if constexpr (std::is_same_v<T, Cancel>) {
                    need_motorist(b.motorist);
                } else if constexpr (std::is_same_v<T, Reserve>) {
                    need_motorist(b.motorist);
                    need_space(b.space);
                } else {
                    need_space(b.space);
                }
                if constexpr (std::is_same_v<T, CardTap>) {
                    if (!cards.count(b.uid)) {
                        throw ScriptError(where + ": card " + b.uid.str() + " is not declared in setup");
                    }
                }
                if constexpr (std::is_same_v<T, ExpectSlot>) {
                    if (b.holder) need_motorist(*b.holder);
                }
            },
            a.body);
    }
}

json to_json(const ScenarioScript& s) {
    json spaces = json::array();
    for (const auto& sp : s.spaces) {
        json j = api::to_request_json(sp.spec);
        j["key"] = sp.key;
        spaces.push_back(std::move(j));
    }
    json motorists = json::array();
    for (const auto& m : s.motorists) {
        json j = api::to_request_json(m.profile);
        j["key"] = m.key;
        motorists.push_back(std::move(j));
    }
    json cards = json::array();
    for (const auto& c : s.unregistered_cards) cards.push_back(c.str());

    json actions = json::array();
    for (const auto& a : s.actions) {
        json j{{"at", a.at_ms}, {"type", action_type(a.body)}};
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, CardTap>) {
                    j["space"] = b.space;
                    j["lane"] = link::to_string(b.lane);
                    j["uid"] = b.uid.str();
                    j["retry_ms"] = b.retry.count();
                    j["max_attempts"] = b.max_attempts;
                } else if constexpr (std::is_same_v<T, Partition>) {
                    j["space"] = b.space;
                    j["duration_ms"] = b.duration.count();
                } else if constexpr (std::is_same_v<T, Delay>) {
                    j["space"] = b.space;
                    j["latency_ms"] = b.latency.count();
                } else if constexpr (std::is_same_v<T, DropNext>) {
                    j["space"] = b.space;
                    j["n"] = b.n;
                    j["direction"] = b.direction == Direction::Up ? "up" : "down";
                } else if constexpr (std::is_same_v<T, AdvanceTime>) {
                    j["duration_ms"] = b.duration.count();
                } else if constexpr (std::is_same_v<T, Reserve>) {
                    j["motorist"] = b.motorist;
                    j["space"] = b.space;
                    j["slot"] = b.slot;
                    if (b.expect_error) j["expect_error"] = *b.expect_error;
                } else if constexpr (std::is_same_v<T, Cancel>) {
                    j["motorist"] = b.motorist;
                } else if constexpr (std::is_same_v<T, ExpectSlot>) {
                    j["space"] = b.space;
                    j["slot"] = b.slot;
                    j["state"] = to_string(b.state);
                    if (b.holder) j["holder"] = *b.holder;
                } else if constexpr (std::is_same_v<T, ExpectGate>) {
                    j["space"] = b.space;
                    j["lane"] = link::to_string(b.lane);
                    j["state"] = to_string(b.state);
                } else if constexpr (std::is_same_v<T, ExpectLcd>) {
                    j["space"] = b.space;
                    j["lane"] = link::to_string(b.lane);
                    j["text"] = b.text;
                } else if constexpr (std::is_same_v<T, ExpectBuffer>) {
                    j["space"] = b.space;
                    j["size"] = b.size;
                }
            },
            a.body);
        actions.push_back(std::move(j));
    }

    const SimConfig& c = s.config;
    return json{{"seed", s.seed},
                {"start", format_iso8601(s.start)},
                {"config",
                 {{"gate_open_ms", c.gate.open_for.count()},
                  {"gate_travel_ms", c.gate.travel.count()},
                  {"auth_timeout_ms", c.auth_timeout.count()},
                  {"heartbeat_ms", c.heartbeat_interval.count()},
                  {"retransmit_ms", c.retransmit_after.count()},
                  {"lcd_hold_ms", c.lcd_hold.count()},
                  {"buffer_capacity", c.buffer_capacity},
                  {"reservation_ttl_min",
                   std::chrono::duration_cast<std::chrono::minutes>(c.engine.reservation_ttl).count()},
                  {"allow_walk_in", c.engine.allow_walk_in}}},
                {"setup", {{"spaces", spaces}, {"motorists", motorists}, {"unregistered_cards", cards}}},
                {"actions", actions}};
}

} // namespace parking::sim
