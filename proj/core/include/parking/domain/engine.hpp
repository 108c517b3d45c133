#pragma once

#include "parking/domain/events.hpp"
#include "parking/domain/types.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace parking {

struct EngineConfig {
    Duration reservation_ttl = std::chrono::minutes{30};
    /// Lets a registered card without a reservation take the lowest vacant
    /// slot at the entry gate.
    bool allow_walk_in = false;
};

struct SpaceSpec {
    std::string name;
    Location location;
    std::int64_t capacity = 0;
    AdminContact admin;
    Tariff tariff;
    std::string currency = "UGX";
    std::string device_token;
};

struct MotoristProfile {
    std::string full_name;
    std::string nationality;
    std::string national_id;
    std::string contact;
    std::string rfid_uid;
    std::string access_token;
};

struct SpaceSummary {
    SpaceId space_id;
    std::string name;
    Location location;
    AdminContact admin;
    Tariff tariff;
    std::string currency;
    std::size_t capacity = 0;
    Availability counts;
    bool operator==(const SpaceSummary&) const = default;
};

using Claim = std::variant<Reservation, ParkingSession>;

/// Everything the engine knows. Ordered maps keep iteration deterministic.
struct EngineState {
    std::uint64_t last_seq = 0;
    std::map<SpaceId, ParkingSpace> spaces;
    std::map<MotoristId, Motorist> motorists;
    std::map<ReservationId, Reservation> reservations;
    std::map<SessionId, ParkingSession> sessions;

    bool operator==(const EngineState&) const = default;
};

/// Slot lifecycle and reservation engine. Pure logic: every operation takes
/// `now` explicitly and records exactly the events it applies.
///
/// Each mutation is decided against current state, turned into EventRecords,
/// handed to the journal (which may throw to veto), then applied. Observers
/// see each applied record together with the slot transition it caused.
///
/// Not thread-safe; callers serialize writers.
class Engine {
public:
    using Journal = std::function<void(const EventRecord&)>;
    using Observer = std::function<void(const EventRecord&, const std::optional<StateChange>&)>;

    explicit Engine(EngineConfig config = {});

    /// Rebuilds an engine from a previously captured state.
    static Engine restore(EngineState state, EngineConfig config = {});

    const EngineConfig& config() const { return config_; }
    void set_journal(Journal journal) { journal_ = std::move(journal); }
    void add_observer(Observer observer) { observers_.push_back(std::move(observer)); }
    void clear_hooks();

    // Registry.
    ParkingSpace register_space(const SpaceSpec& spec, Timestamp now);
    Motorist register_motorist(const MotoristProfile& profile, Timestamp now);
    Motorist bind_card(const MotoristId& motorist, std::string_view rfid_uid, Timestamp now);

    // Reservation lifecycle.
    Reservation reserve_slot(const SpaceId& space, SlotNo slot, const MotoristId& motorist,
                             Timestamp now);
    void cancel_reservation(const ReservationId& reservation, Timestamp now);
    std::vector<ReservationId> expire_reservations(Timestamp now);

    // Gate authentication.
    GateOutcome check_in(const SpaceId& space, const RfidUid& uid, Timestamp now);
    GateOutcome check_out(const SpaceId& space, const RfidUid& uid, Timestamp now);

    // Queries.
    Availability availability(const SpaceId& space) const;
    std::vector<SpaceSummary> list_spaces() const;
    const ParkingSpace* find_space(const SpaceId& id) const;
    const Motorist* find_motorist(const MotoristId& id) const;
    const Reservation* find_reservation(const ReservationId& id) const;
    const ParkingSession* find_session(const SessionId& id) const;
    std::optional<Motorist> find_motorist_by_uid(const RfidUid& uid) const;
    std::optional<Motorist> find_motorist_by_token(std::string_view token) const;
    /// The open reservation or session of this credential at this space.
    std::optional<Claim> active_claim(const RfidUid& uid, const SpaceId& space) const;
    /// The credential's claim at any space.
    std::optional<Claim> active_claim(const MotoristId& motorist) const;

    const EngineState& state() const { return state_; }
    std::uint64_t last_seq() const { return state_.last_seq; }

    /// Replay path: applies a recorded event without journaling it. The
    /// record must carry seq == last_seq() + 1 and be consistent with the
    /// current state; otherwise DomainError(InvalidEvent).
    void apply(const EventRecord& record);

private:
    using ClaimRef = std::variant<ReservationId, SessionId>;

    void rebuild_indexes();
    void emit(EventPayload payload, Timestamp now);
    std::optional<StateChange> apply_payload(const EventRecord& record);

    ParkingSpace& space_ref(const SpaceId& id);
    const ParkingSpace& space_ref(const SpaceId& id) const;
    SlotState& slot_ref(ParkingSpace& space, SlotNo slot);

    EngineConfig config_;
    EngineState state_;
    Journal journal_;
    std::vector<Observer> observers_;

    std::map<RfidUid, MotoristId> by_uid_;
    std::map<std::string, MotoristId> by_national_id_;
    std::map<std::string, MotoristId> by_token_;
    std::map<MotoristId, ClaimRef> claims_;
    std::map<std::pair<MotoristId, SpaceId>, ReservationId> latest_reservation_;
};

/// Slot counts derived by scanning slot states.
Availability count_slots(const ParkingSpace& space);

} // namespace parking
