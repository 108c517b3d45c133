#include "parking/link/edge_buffer.hpp"

#include <algorithm>
#include <string>

namespace parking::link {

void EdgeBuffer::push(StatusUpdate update) {
    if (entries_.size() >= capacity_) {
        throw BufferOverflow("edge buffer full (" + std::to_string(capacity_) +
                             " frames); update " + std::to_string(update.update_seq) +
                             " refused");
    }
    entries_.push_back(Entry{std::move(update), std::nullopt, Timestamp{}});
}

DeliveryReport EdgeBuffer::flush(ConnectionState state, Timestamp now, Duration retransmit_after,
                                 const Transmit& transmit) {
    DeliveryReport report;
    if (state == ConnectionState::Connected) {
        for (auto& e : entries_) {
            const bool due = !e.inflight_frame_id || now - e.last_sent >= retransmit_after;
            if (!due) continue;
            e.inflight_frame_id = transmit(e.update);
            e.last_sent = now;
            ++report.transmitted;
        }
    }
    report.pending = entries_.size();
    return report;
}

bool EdgeBuffer::ack(std::uint64_t frame_id) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
        return e.inflight_frame_id && *e.inflight_frame_id == frame_id;
    });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

void EdgeBuffer::connection_lost() {
    for (auto& e : entries_) e.inflight_frame_id.reset();
}

} // namespace parking::link
