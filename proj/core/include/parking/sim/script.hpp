#pragma once

#include "parking/domain/engine.hpp"
#include "parking/json.hpp"
#include "parking/link/frame.hpp"
#include "parking/sim/gate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace parking::sim {

class ScriptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Direction { Up, Down }; // up: edge -> cloud

struct SimConfig {
    GateTiming gate;
    Duration auth_timeout{3000};
    Duration heartbeat_interval{5000};
    Duration retransmit_after{3000};
    Duration lcd_hold{5000}; // how long a rejection stays on the LCD
    std::size_t buffer_capacity = 1024;
    EngineConfig engine; // used when the cloud runs in-process
};

struct SpaceSetup {
    std::string key;
    SpaceSpec spec;
};

struct MotoristSetup {
    std::string key;
    MotoristProfile profile;
};

struct CardTap {
    std::string space;
    link::Lane lane = link::Lane::Entry;
    RfidUid uid = RfidUid::from("00000000");
    Duration retry{0};     // wait before tapping again after "TRY AGAIN"
    int max_attempts = 1;
};
struct Partition {
    std::string space;
    Duration duration{0};
};
struct Delay {
    std::string space;
    Duration latency{0}; // added to every cloud->edge frame from now on
};
struct DropNext {
    std::string space;
    int n = 1;
    Direction direction = Direction::Down;
};
struct AdvanceTime {
    Duration duration{0};
};
struct Reserve {
    std::string motorist;
    std::string space;
    SlotNo slot = 1;
    std::optional<std::string> expect_error; // ErrorCode name, e.g. "SlotNotVacant"
};
struct Cancel {
    std::string motorist; // cancels this motorist's latest scripted reservation
};
struct ExpectSlot {
    std::string space;
    SlotNo slot = 1;
    SlotKind state = SlotKind::Vacant;
    std::optional<std::string> holder; // motorist key
};
struct ExpectGate {
    std::string space;
    link::Lane lane = link::Lane::Entry;
    GateState state = GateState::Closed;
};
struct ExpectLcd {
    std::string space;
    link::Lane lane = link::Lane::Entry;
    std::string text;
};
struct ExpectBuffer {
    std::string space;
    std::size_t size = 0;
};

using ActionBody = std::variant<CardTap, Partition, Delay, DropNext, AdvanceTime, Reserve, Cancel,
                                ExpectSlot, ExpectGate, ExpectLcd, ExpectBuffer>;

struct Action {
    std::int64_t at_ms = 0;
    ActionBody body;
};

/// A deterministic simulation input:
///   {"seed": 7, "start": "2024-05-01T08:00:00Z"?, "config": {...}?,
///    "setup": {"spaces": [...], "motorists": [...], "unregistered_cards": [...]},
///    "actions": [{"at": 0, "type": "card_tap", ...}, ...]}
/// Every space and card an action names must be declared in setup.
struct ScenarioScript {
    std::uint64_t seed = 0;
    Timestamp start = from_millis(1714550400000); // 2024-05-01T08:00:00Z
    SimConfig config;
    std::vector<SpaceSetup> spaces;
    std::vector<MotoristSetup> motorists;
    std::vector<RfidUid> unregistered_cards;
    std::vector<Action> actions;
};

/// Throws ScriptError naming the offending action.
ScenarioScript parse_script(const json& j);
ScenarioScript load_script(const std::filesystem::path& path);
json to_json(const ScenarioScript& script);

/// Checks key references, uids and time ordering. Throws ScriptError.
void validate(const ScenarioScript& script);

std::string_view action_type(const ActionBody& body);

} // namespace parking::sim
