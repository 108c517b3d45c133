#include "parking/api/event_hub.hpp"

#include <algorithm>

namespace parking::api {

std::optional<StreamEvent> Subscription::next(Duration wait) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, wait, [this] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    StreamEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_ && queue_.empty();
}

bool Subscription::overflowed() const {
    std::lock_guard lock(mu_);
    return overflowed_;
}

void Subscription::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

void Subscription::push_backlog(std::vector<StreamEvent> events) {
    std::lock_guard lock(mu_);
    for (auto& e : events) queue_.push_back(std::move(e));
}

void Subscription::push(const StreamEvent& e) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (queue_.size() >= capacity_) {
            overflowed_ = true;
            closed_ = true;
        } else {
            queue_.push_back(e);
        }
    }
    cv_.notify_all();
}

StreamEvent EventHub::publish(const StateChange& change) {
    std::lock_guard lock(mu_);
    StreamEvent e{history_.size() + 1, change.at,          change.space_id, change.slot_no,
                  kind_of(change.new_state), change.cause, change.holder};
    history_.push_back(e);
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& w) {
        auto sub = w.lock();
        if (!sub) return true;
        sub->push(e);
        return false;
    });
    return e;
}

std::shared_ptr<Subscription> EventHub::subscribe(std::uint64_t since) {
    auto sub = std::make_shared<Subscription>(subscriber_capacity_);
    std::lock_guard lock(mu_);
    const auto start = std::min<std::uint64_t>(since, history_.size());
    sub->push_backlog({history_.begin() + static_cast<std::ptrdiff_t>(start), history_.end()});
    subscribers_.push_back(sub);
    return sub;
}

std::vector<StreamEvent> EventHub::history_since(std::uint64_t since) const {
    std::lock_guard lock(mu_);
    const auto start = std::min<std::uint64_t>(since, history_.size());
    return {history_.begin() + static_cast<std::ptrdiff_t>(start), history_.end()};
}

std::uint64_t EventHub::last_seq() const {
    std::lock_guard lock(mu_);
    return history_.size();
}

void EventHub::shutdown() {
    std::lock_guard lock(mu_);
    for (auto& w : subscribers_) {
        if (auto sub = w.lock()) sub->close();
    }
    subscribers_.clear();
}

} // namespace parking::api
