#pragma once

#include "parking/domain/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace parking::link {

enum class Lane { Entry, Exit };
std::string_view to_string(Lane lane);
std::optional<Lane> parse_lane(std::string_view text);

/// First frame on every connection: the edge node proves which space it is.
struct Hello {
    SpaceId space_id;
    std::string token;
    bool operator==(const Hello&) const = default;
};

struct AuthReq {
    SpaceId space_id;
    Lane lane = Lane::Entry;
    RfidUid rfid_uid = RfidUid::from("00000000");
    bool operator==(const AuthReq&) const = default;
};

struct AuthResp {
    std::uint64_t request_frame_id = 0;
    AuthDecision decision;
    std::optional<SlotNo> slot_no; // slot the gate leads to, when accepted
    std::optional<Money> fee;      // charged amount, on accepted exit
    bool operator==(const AuthResp&) const = default;
};

/// Edge-observed slot change (a car passed the gate). update_seq is assigned
/// by the node, never reused, and is the cloud's dedup key.
struct StatusUpdate {
    SpaceId space_id;
    SlotNo slot_no = 1;
    SlotKind new_state = SlotKind::Occupied;
    ChangeCause cause = ChangeCause::CheckedIn;
    std::uint64_t update_seq = 1;
    bool operator==(const StatusUpdate&) const = default;
};

struct Ack {
    std::uint64_t frame_id = 0;
    bool operator==(const Ack&) const = default;
};

struct Heartbeat {
    SpaceId space_id;
    bool operator==(const Heartbeat&) const = default;
};

struct ErrorBody {
    int code = 400;
    std::string text;
    bool operator==(const ErrorBody&) const = default;
};

using FrameBody = std::variant<Hello, AuthReq, AuthResp, StatusUpdate, Ack, Heartbeat, ErrorBody>;

struct DeviceFrame {
    std::uint64_t frame_id = 1;
    Timestamp sent_at;
    FrameBody body;

    std::string_view kind() const;
    bool operator==(const DeviceFrame&) const = default;
};

enum class DecodeErrorKind { Truncated, BadJson, UnknownKind, InvariantViolation };
std::string_view to_string(DecodeErrorKind k);

struct DecodeError {
    DecodeErrorKind kind = DecodeErrorKind::BadJson;
    std::size_t position = 0; // byte offset into the input
    std::string reason;
};

using DecodeResult = std::variant<DeviceFrame, DecodeError>;

inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

/// One JSON object terminated by '\n'. Keys are emitted in sorted order.
std::string encode_frame(const DeviceFrame& frame);

/// Decodes one line (trailing '\n' optional). Never throws; anything that is
/// not a valid frame comes back as a DecodeError. Unknown top-level keys are
/// ignored.
DecodeResult decode_frame(std::string_view bytes);

} // namespace parking::link
