#pragma once

#include "parking/domain/types.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace parking::api {

/// One entry of the public event stream. seq is dense: 1, 2, 3, ...
struct StreamEvent {
    std::uint64_t seq = 0;
    Timestamp at;
    SpaceId space_id;
    SlotNo slot_no = 0;
    SlotKind state = SlotKind::Vacant;
    ChangeCause cause = ChangeCause::Reserved;
    std::optional<MotoristId> holder;
    bool operator==(const StreamEvent&) const = default;
};

/// A subscriber's bounded queue. Overflowing it closes the subscription
/// rather than blocking the publisher.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Waits up to `wait` for the next event. nullopt on timeout or close.
    std::optional<StreamEvent> next(Duration wait);
    bool closed() const;
    bool overflowed() const;
    void close();

private:
    friend class EventHub;
    void push_backlog(std::vector<StreamEvent> events);
    void push(const StreamEvent& e);

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<StreamEvent> queue_;
    std::size_t capacity_;
    bool closed_ = false;
    bool overflowed_ = false;
};

/// Fans slot state changes out to stream subscribers and keeps the history
/// needed to resume from any `since` seq.
class EventHub {
public:
    explicit EventHub(std::size_t subscriber_capacity = 4096)
        : subscriber_capacity_(subscriber_capacity) {}

    StreamEvent publish(const StateChange& change);

    /// Queues every retained event with seq > since, then live events.
    std::shared_ptr<Subscription> subscribe(std::uint64_t since);

    std::vector<StreamEvent> history_since(std::uint64_t since) const;
    std::uint64_t last_seq() const;
    void shutdown();

private:
    mutable std::mutex mu_;
    std::vector<StreamEvent> history_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
    std::size_t subscriber_capacity_;
};

} // namespace parking::api
