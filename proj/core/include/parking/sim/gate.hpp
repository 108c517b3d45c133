#pragma once

#include "parking/time.hpp"

#include <stdexcept>
#include <string_view>

namespace parking::sim {

enum class GateState { Closed, Opening, Open, Closing };
enum class GateEvent { DecisionAccepted, DecisionRejected, TimerElapsed };

std::string_view to_string(GateState s);
std::string_view to_string(GateEvent e);

class IllegalGateEvent : public std::logic_error {
public:
    IllegalGateEvent(GateState state, GateEvent event);
    GateState state() const { return state_; }
    GateEvent event() const { return event_; }

private:
    GateState state_;
    GateEvent event_;
};

struct GateTiming {
    Duration travel{1000};     // Opening->Open and Closing->Closed
    Duration open_for{10000};  // time spent Open before closing
};

/// Servo gate transitions:
///   Closed  + Accepted -> Opening
///   Opening + Timer    -> Open
///   Open    + Timer    -> Closing
///   Closing + Timer    -> Closed
/// Rejected leaves any state unchanged. Everything else is IllegalGateEvent,
/// including Accepted while the gate is already moving or open.
GateState step_gate(GateState state, GateEvent event);

/// How long the gate stays in `state` before its timer fires. Zero for Closed.
Duration dwell(GateState state, const GateTiming& timing);

} // namespace parking::sim
