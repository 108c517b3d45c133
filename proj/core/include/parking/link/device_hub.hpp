#pragma once

#include "parking/link/frame.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <tuple>

namespace parking::link {

enum class Liveness { Online, Offline };
std::string_view to_string(Liveness l);

/// Offline iff more than three heartbeat intervals have passed since the last
/// heartbeat (exactly three is still Online).
Liveness liveness(Timestamp last_heartbeat_at, Timestamp now, Duration heartbeat_interval);

struct EdgeTelemetry {
    std::size_t confirmed_entries = 0;
    std::size_t confirmed_exits = 0;
    std::size_t updates_applied = 0;
    bool operator==(const EdgeTelemetry&) const = default;
};

/// An Accepted decision whose gate pass has not been confirmed yet. A retried
/// AuthReq for the same card and lane gets the same answer instead of a fresh
/// engine call, which covers responses lost on the way to the edge.
struct PendingPass {
    RfidUid rfid_uid = RfidUid::from("00000000");
    SlotNo slot_no = 0;
    SessionId session_id;
    AuthResp response;
};

/// Cloud-side state shared by all edge connections. Thread-safe.
class DeviceHub {
public:
    explicit DeviceHub(Duration heartbeat_interval = std::chrono::seconds{5})
        : heartbeat_interval_(heartbeat_interval) {}

    Duration heartbeat_interval() const { return heartbeat_interval_; }

    void heartbeat(const SpaceId& space, Timestamp at);
    std::optional<Timestamp> last_heartbeat(const SpaceId& space) const;
    /// Offline when the space was never heard from.
    Liveness liveness(const SpaceId& space, Timestamp now) const;

    /// Applies an edge StatusUpdate once per (space, update_seq). Returns
    /// false for duplicates.
    bool apply_status_update(const StatusUpdate& update);
    EdgeTelemetry telemetry(const SpaceId& space) const;

    void remember_pass(const SpaceId& space, Lane lane, PendingPass pass);
    std::optional<PendingPass> pending_pass(const SpaceId& space, Lane lane,
                                            const RfidUid& uid) const;

private:
    using PassKey = std::tuple<SpaceId, Lane, SlotNo>;

    Duration heartbeat_interval_;
    mutable std::mutex mu_;
    std::map<SpaceId, Timestamp> heartbeats_;
    std::map<SpaceId, std::set<std::uint64_t>> applied_;
    std::map<SpaceId, EdgeTelemetry> telemetry_;
    std::map<PassKey, PendingPass> passes_;
};

} // namespace parking::link
