#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parking {

enum class ErrorCode {
    InvalidCapacity,
    InvalidCoordinates,
    InvalidTariff,
    InvalidProfile,
    MalformedUid,
    DuplicateCredential,
    DuplicateNationalId,
    UnknownSpace,
    UnknownSlot,
    UnknownMotorist,
    UnknownReservation,
    SlotNotVacant,
    MotoristHasActiveClaim,
    NotActive,
    NotOwner,
    NegativeDuration,
    InvalidEvent,
};

std::string_view to_string(ErrorCode code);

/// Raised by engine operations when a request cannot be honoured. Credential
/// problems at the gate are not errors; they come back as Rejected decisions.
class DomainError : public std::runtime_error {
public:
    DomainError(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace parking
