#include "parking/sim/gate.hpp"

#include <string>

namespace parking::sim {

std::string_view to_string(GateState s) {
    switch (s) {
    case GateState::Closed: return "closed";
    case GateState::Opening: return "opening";
    case GateState::Open: return "open";
    case GateState::Closing: return "closing";
    }
    return "?";
}

std::string_view to_string(GateEvent e) {
    switch (e) {
    case GateEvent::DecisionAccepted: return "decision_accepted";
    case GateEvent::DecisionRejected: return "decision_rejected";
    case GateEvent::TimerElapsed: return "timer_elapsed";
    }
    return "?";
}

IllegalGateEvent::IllegalGateEvent(GateState state, GateEvent event)
    : std::logic_error("gate cannot take " + std::string(to_string(event)) + " while " +
                       std::string(to_string(state))),
      state_(state), event_(event) {}

GateState step_gate(GateState state, GateEvent event) {
    if (event == GateEvent::DecisionRejected) return state;
    if (event == GateEvent::DecisionAccepted) {
        if (state == GateState::Closed) return GateState::Opening;
        throw IllegalGateEvent(state, event);
    }
    switch (state) {
    case GateState::Opening: return GateState::Open;
    case GateState::Open: return GateState::Closing;
    case GateState::Closing: return GateState::Closed;
    case GateState::Closed: break;
    }
    throw IllegalGateEvent(state, event);
}

Duration dwell(GateState state, const GateTiming& timing) {
    switch (state) {
    case GateState::Opening:
    case GateState::Closing: return timing.travel;
    case GateState::Open: return timing.open_for;
    case GateState::Closed: break;
    }
    return Duration{0};
}

} // namespace parking::sim
