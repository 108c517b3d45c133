#pragma once

#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"
#include "parking/link/frame.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parking::link {

/// Cloud end of one edge connection. Transport-agnostic: feed it the bytes
/// read from the stream and write back whatever it returns.
///
/// The first frame must be a Hello carrying the space's device token; any
/// other traffic before that gets Error 401 and the session closes. Frames are
/// handled strictly in order.
class LinkSession {
public:
    LinkSession(api::ParkingService& service, DeviceHub& hub) : service_(service), hub_(hub) {}

    /// Consumes raw bytes (any split across lines) and returns the encoded
    /// response frames.
    std::string on_bytes(std::string_view data);

    /// Handles one decoded frame and returns the frames to send back.
    std::vector<DeviceFrame> handle(const DeviceFrame& frame);

    bool closed() const { return closed_; }
    const std::optional<SpaceId>& space() const { return space_; }

private:
    DeviceFrame make(FrameBody body);
    DeviceFrame error(int code, std::string text);
    AuthResp authenticate(std::uint64_t request_frame_id, const AuthReq& req);
    std::vector<DeviceFrame> handle_line(std::string_view line);

    api::ParkingService& service_;
    DeviceHub& hub_;
    std::optional<SpaceId> space_;
    std::string pending_;
    std::uint64_t next_out_ = 1;
    std::uint64_t last_in_ = 0;
    bool closed_ = false;
};

} // namespace parking::link
