#pragma once

#include "parking/api/event_hub.hpp"
#include "parking/domain/engine.hpp"
#include "parking/store/store.hpp"
#include "parking/time.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace parking::api {

/// A space together with the motorist behind each slot, read atomically.
struct SpaceView {
    ParkingSpace space;
    std::vector<std::optional<MotoristId>> holders; // index slot_no - 1
};

/// Thread-safe front door to the engine. All mutations go through one writer
/// lock (claims are exclusive system-wide, so the writer is global rather
/// than per space); queries take a shared lock and see a consistent state.
///
/// Each mutation first sweeps due reservation expiries, then runs the
/// command. By the time a mutating call returns, its events are in the log
/// and published to the event hub.
class ParkingService {
public:
    ParkingService(std::unique_ptr<store::Store> store, const Clock& clock,
                   std::uint64_t token_seed = std::random_device{}());
    ~ParkingService();

    ParkingService(const ParkingService&) = delete;
    ParkingService& operator=(const ParkingService&) = delete;

    Timestamp now() const { return clock_.now(); }
    const EngineConfig& config() const { return config_; }

    // Mutations. Errors surface as DomainError (or store exceptions).
    ParkingSpace register_space(SpaceSpec spec);
    Motorist register_motorist(MotoristProfile profile);
    Motorist bind_card(const MotoristId& motorist, std::string_view rfid_uid);
    Reservation reserve(const MotoristId& motorist, const SpaceId& space, SlotNo slot);
    /// Only the reservation's owner may cancel (DomainError NotOwner).
    void cancel(const MotoristId& caller, const ReservationId& reservation);
    std::vector<ReservationId> expire_due();
    GateOutcome check_in(const SpaceId& space, const RfidUid& uid);
    GateOutcome check_out(const SpaceId& space, const RfidUid& uid);

    // Queries.
    std::optional<MotoristId> authenticate(std::string_view token) const;
    bool authenticate_device(const SpaceId& space, std::string_view token) const;
    std::vector<SpaceSummary> list_spaces() const;
    std::optional<ParkingSpace> space(const SpaceId& id) const;
    std::optional<Reservation> reservation(const ReservationId& id) const;
    std::optional<ParkingSession> session(const SessionId& id) const;
    std::optional<Motorist> motorist(const MotoristId& id) const;
    std::optional<Motorist> motorist_by_uid(const RfidUid& uid) const;
    std::optional<Claim> active_claim(const RfidUid& uid, const SpaceId& space) const;
    std::optional<Claim> active_claim(const MotoristId& motorist) const;
    std::optional<SpaceView> space_view(const SpaceId& id) const;
    /// Motorist behind a Reserved/Occupied slot, if any.
    std::optional<MotoristId> slot_holder(const SpaceId& space, SlotNo slot) const;
    EngineState state() const;

    EventHub& events() { return hub_; }

private:
    std::string fresh_token();
    void sweep(Timestamp now);

    const Clock& clock_;
    std::unique_ptr<store::Store> store_;
    EngineConfig config_;
    EventHub hub_;
    mutable std::shared_mutex mu_;
    std::mt19937_64 rng_;
};

} // namespace parking::api
