#include "parking/domain/fee.hpp"

#include "parking/domain/errors.hpp"

#include <algorithm>

namespace parking {

Money fee_for_duration(Duration parked, const Tariff& tariff) {
    if (parked < Duration::zero()) {
        throw DomainError(ErrorCode::NegativeDuration, std::to_string(parked.count()) + "ms");
    }
    if (tariff.free) return Money{0};

    const Duration unit = tariff.billing_unit;
    const Duration billable = std::max(Duration::zero(), parked - Duration{tariff.free_minutes});
    const std::int64_t units = (billable.count() + unit.count() - 1) / unit.count();
    return Money{units * tariff.rate_per_unit.minor};
}

Money compute_fee(const ParkingSession& session, const Tariff& tariff, Timestamp now) {
    const Timestamp exit = session.exit_at.value_or(now);
    return fee_for_duration(exit - session.entry_at, tariff);
}

} // namespace parking
