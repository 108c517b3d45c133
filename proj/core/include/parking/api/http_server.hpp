#pragma once

#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

namespace parking::api {

struct HttpOptions {
    /// A ": heartbeat" line goes down idle event streams this often.
    Duration stream_heartbeat = std::chrono::seconds{15};
    /// How often due reservations are expired without waiting for traffic.
    Duration expiry_tick = std::chrono::seconds{1};
    /// Advertised through GET /info so tools can find the edge port.
    std::string device_link_addr;
};

/// The motorist-facing HTTP/JSON API:
///
///   POST   /spaces                     register a lot (returns its device token)
///   GET    /spaces                     summaries with counts, tariff, TTL, edge status
///   GET    /spaces/{id}                one SlotView per slot
///   POST   /spaces/{id}/reservations   {"slot_no"}             bearer
///   DELETE /reservations/{id}                                  bearer
///   POST   /motorists                  register (returns access token)
///   PUT    /motorists/{id}/card        {"rfid_uid"}            bearer
///   GET    /me                         caller and active claim bearer
///   GET    /events?since=N             NDJSON change stream
///   GET    /info                       device-link address and timing
///
/// Errors are {"error": code, "detail": text}.
class HttpServer {
public:
    HttpServer(ParkingService& service, link::DeviceHub& hub, HttpOptions options = {});
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free one. Returns the bound port. Throws
    /// std::runtime_error.
    std::uint16_t listen(const std::string& host, std::uint16_t port);
    void start();
    void stop();
    void set_device_link_addr(std::string addr);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace parking::api
