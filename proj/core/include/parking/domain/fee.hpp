#pragma once

#include "parking/domain/types.hpp"

namespace parking {

/// Parking charge for a session. Uses exit_at when the session is closed,
/// otherwise `now` as a provisional exit.
///
/// Free tariffs always charge zero. Otherwise the free allowance is deducted
/// and every started billing unit is charged in full:
///   units = ceil(max(0, duration - free_minutes) / billing_unit)
///
/// Throws DomainError(NegativeDuration) when exit precedes entry.
Money compute_fee(const ParkingSession& session, const Tariff& tariff, Timestamp now);

/// Same arithmetic over a bare duration.
Money fee_for_duration(Duration parked, const Tariff& tariff);

} // namespace parking
