#pragma once

#include "parking/link/frame.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>

namespace parking::link {

class BufferOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ConnectionState { Connected, Disconnected };

struct DeliveryReport {
    std::size_t transmitted = 0; // frames put on the wire by this flush
    std::size_t pending = 0;     // entries still awaiting an Ack
};

/// Store-and-forward queue of StatusUpdates on the edge node. Entries leave
/// only when the cloud acknowledges them; order is preserved and a full queue
/// refuses new entries loudly.
class EdgeBuffer {
public:
    static constexpr std::size_t kDefaultCapacity = 1024;

    struct Entry {
        StatusUpdate update;
        std::optional<std::uint64_t> inflight_frame_id;
        Timestamp last_sent;
    };

    /// Sends one update and returns the frame_id it went out under.
    using Transmit = std::function<std::uint64_t(const StatusUpdate&)>;

    explicit EdgeBuffer(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

    /// Throws BufferOverflow when full.
    void push(StatusUpdate update);

    /// While connected, transmits every entry not yet in flight, plus
    /// in-flight entries unacknowledged for at least `retransmit_after`.
    /// Disconnected: sends nothing.
    DeliveryReport flush(ConnectionState state, Timestamp now, Duration retransmit_after,
                         const Transmit& transmit);

    /// Releases the entry sent under frame_id. False if none matches.
    bool ack(std::uint64_t frame_id);

    /// In-flight frames died with the connection; all entries are resent on
    /// the next flush.
    void connection_lost();

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<Entry>& entries() const { return entries_; }

private:
    std::size_t capacity_;
    std::deque<Entry> entries_;
};

} // namespace parking::link
