#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace parking {

using Duration = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Duration>;

inline constexpr Timestamp from_millis(std::int64_t ms) { return Timestamp{Duration{ms}}; }
inline constexpr std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }

/// Renders as "YYYY-MM-DDTHH:MM:SS.mmmZ" (UTC, millisecond precision).
std::string format_iso8601(Timestamp t);

/// Accepts the format produced by format_iso8601, with the fractional part
/// optional (0-3 digits). Returns nullopt on anything else.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Source of "now" for the service layers. The domain engine never reads a
/// clock itself; callers pass timestamps in.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override {
        return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
    }
};

class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = from_millis(0)) : ms_(to_millis(start)) {}

    Timestamp now() const override { return from_millis(ms_.load()); }
    void set(Timestamp t) { ms_.store(to_millis(t)); }
    void advance(Duration d) { ms_.fetch_add(d.count()); }

private:
    std::atomic<std::int64_t> ms_;
};

} // namespace parking
