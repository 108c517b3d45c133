#pragma once

// Reference model of the slot rules, written straight from the operation
// contracts with plain integers. Tests drive it side by side with the engine
// and compare outcomes and slot kinds after every step.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace model {

enum class Kind { Vacant, Reserved, Occupied };

struct Slot {
    Kind kind = Kind::Vacant;
    int holder = -1;
};

enum class Status { Active, Cancelled, Expired, Converted };

struct Booking {
    int space = 0;
    int slot = 0; // 0-based
    std::int64_t expires = 0;
    Status status = Status::Active;
};

struct Stay {
    int space = 0;
    int slot = 0;
};

/// Outcome strings: "ok" for success, otherwise the error code or the reject
/// reason name.
class Model {
public:
    Model(std::int64_t ttl_ms, int motorists) : ttl_(ttl_ms), latest_(motorists), inside_(motorists) {}

    int add_space(int capacity) {
        spaces_.emplace_back(capacity);
        return static_cast<int>(spaces_.size()) - 1;
    }

    const std::vector<Slot>& slots(int space) const { return spaces_.at(space); }
    int spaces() const { return static_cast<int>(spaces_.size()); }

    std::string reserve(int m, int space, int slot, std::int64_t now) {
        auto& slots = spaces_.at(space);
        if (slot < 0 || slot >= static_cast<int>(slots.size())) return "UnknownSlot";
        if (slots[slot].kind != Kind::Vacant) return "SlotNotVacant";
        if (has_claim(m)) return "MotoristHasActiveClaim";
        slots[slot] = {Kind::Reserved, m};
        latest_[m] = Booking{space, slot, now + ttl_, Status::Active};
        by_space_[{m, space}] = Status::Active;
        return "ok";
    }

    /// Cancels the motorist's most recent reservation, wherever it was.
    std::string cancel_latest(int m) {
        auto& b = latest_.at(m);
        if (!b) return "none";
        if (b->status != Status::Active) return "NotActive";
        spaces_[b->space][b->slot] = {};
        b->status = Status::Cancelled;
        by_space_[{m, b->space}] = Status::Cancelled;
        return "ok";
    }

    int expire(std::int64_t now) {
        int n = 0;
        for (std::size_t m = 0; m < latest_.size(); ++m) {
            auto& b = latest_[m];
            if (b && b->status == Status::Active && b->expires <= now) {
                spaces_[b->space][b->slot] = {};
                b->status = Status::Expired;
                by_space_[{static_cast<int>(m), b->space}] = Status::Expired;
                ++n;
            }
        }
        return n;
    }

    /// m < 0 is an unregistered card.
    std::string check_in(int m, int space, std::int64_t now) {
        if (m < 0) return "unknown_card";
        if (inside_[m]) return "already_inside";
        auto& b = latest_[m];
        if (b && b->status == Status::Active) {
            if (b->space != space) return "no_reservation";
            if (b->expires <= now) return "reservation_expired";
            spaces_[space][b->slot] = {Kind::Occupied, m};
            b->status = Status::Converted;
            by_space_[{m, space}] = Status::Converted;
            inside_[m] = Stay{space, b->slot};
            return "ok";
        }
        auto it = by_space_.find({m, space});
        if (it != by_space_.end() && it->second == Status::Expired) return "reservation_expired";
        return "no_reservation";
    }

    std::string check_out(int m, int space) {
        if (m < 0) return "unknown_card";
        auto& s = inside_[m];
        if (!s || s->space != space) return "not_inside";
        spaces_[space][s->slot] = {};
        s.reset();
        return "ok";
    }

    bool has_claim(int m) const {
        return inside_[m].has_value() || (latest_[m] && latest_[m]->status == Status::Active);
    }
    bool inside(int m) const { return inside_[m].has_value(); }

private:
    std::int64_t ttl_;
    std::vector<std::vector<Slot>> spaces_;
    std::vector<std::optional<Booking>> latest_;
    std::vector<std::optional<Stay>> inside_;
    std::map<std::pair<int, int>, Status> by_space_;
};

} // namespace model
