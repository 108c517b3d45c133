#pragma once

#include "parking/json.hpp"
#include "parking/link/device_hub.hpp"
#include "parking/sim/cloud.hpp"
#include "parking/sim/script.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace parking::sim {

struct FinalSlot {
    SlotKind state = SlotKind::Vacant;
    std::optional<std::string> holder; // motorist key
    bool operator==(const FinalSlot&) const = default;
};

struct SimulationTrace {
    /// One object per event: {"t": virtual ms, "node": space key or "api",
    /// "event": name, ...}. Events: card_tap, frame_sent, frame_received,
    /// frame_lost, decision, lcd, gate, buffer, buffer_overflow, fault,
    /// api, cloud_state, assert.
    std::vector<json> events;
    std::size_t assertions = 0;
    std::size_t failures = 0;
    std::optional<json> first_failure;

    /// Cloud view after the script and everything it set in motion finished.
    std::map<std::string, std::vector<FinalSlot>> final_slots;
    std::map<std::string, link::EdgeTelemetry> final_telemetry;
    std::map<std::string, std::size_t> final_buffer;

    bool passed() const { return failures == 0; }
    /// JSON lines.
    std::string to_jsonl() const;
};

/// Runs the script against `cloud` in virtual time: registers the setup
/// through the API, connects one edge node per space, then plays the actions
/// and lets gates, timeouts and retransmissions settle.
///
/// Throws ScriptError when the script is invalid or setup is rejected by the
/// cloud.
SimulationTrace run_scenario(const ScenarioScript& script, CloudPort& cloud);

/// Convenience: a fresh in-process cloud configured from the script.
SimulationTrace run_scenario(const ScenarioScript& script);

} // namespace parking::sim
