#include "parking/link/device_hub.hpp"

namespace parking::link {

std::string_view to_string(Liveness l) { return l == Liveness::Online ? "online" : "offline"; }

Liveness liveness(Timestamp last_heartbeat_at, Timestamp now, Duration heartbeat_interval) {
    return now - last_heartbeat_at > 3 * heartbeat_interval ? Liveness::Offline
                                                            : Liveness::Online;
}

void DeviceHub::heartbeat(const SpaceId& space, Timestamp at) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = heartbeats_.emplace(space, at);
    if (!inserted && it->second < at) it->second = at;
}

std::optional<Timestamp> DeviceHub::last_heartbeat(const SpaceId& space) const {
    std::lock_guard lock(mu_);
    auto it = heartbeats_.find(space);
    if (it == heartbeats_.end()) return std::nullopt;
    return it->second;
}

Liveness DeviceHub::liveness(const SpaceId& space, Timestamp now) const {
    auto last = last_heartbeat(space);
    if (!last) return Liveness::Offline;
    return link::liveness(*last, now, heartbeat_interval_);
}

bool DeviceHub::apply_status_update(const StatusUpdate& update) {
    std::lock_guard lock(mu_);
    if (!applied_[update.space_id].insert(update.update_seq).second) return false;
    auto& t = telemetry_[update.space_id];
    ++t.updates_applied;
    const Lane lane = update.cause == ChangeCause::CheckedOut ? Lane::Exit : Lane::Entry;
    if (lane == Lane::Entry) {
        ++t.confirmed_entries;
    } else {
        ++t.confirmed_exits;
    }
    passes_.erase(PassKey{update.space_id, lane, update.slot_no});
    return true;
}

EdgeTelemetry DeviceHub::telemetry(const SpaceId& space) const {
    std::lock_guard lock(mu_);
    auto it = telemetry_.find(space);
    return it == telemetry_.end() ? EdgeTelemetry{} : it->second;
}

void DeviceHub::remember_pass(const SpaceId& space, Lane lane, PendingPass pass) {
    std::lock_guard lock(mu_);
    passes_[PassKey{space, lane, pass.slot_no}] = std::move(pass);
}

std::optional<PendingPass> DeviceHub::pending_pass(const SpaceId& space, Lane lane,
                                                   const RfidUid& uid) const {
    std::lock_guard lock(mu_);
    for (const auto& [key, pass] : passes_) {
        if (std::get<0>(key) == space && std::get<1>(key) == lane && pass.rfid_uid == uid) {
            return pass;
        }
    }
    return std::nullopt;
}

} // namespace parking::link
