#pragma once

#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"
#include "parking/link/session.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace parking::sim {

class CloudUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An edge node's device-link connection.
class LinkStream {
public:
    virtual ~LinkStream() = default;
    /// Writes `bytes` and collects up to `replies` response lines.
    virtual std::vector<std::string> exchange(std::string_view bytes, std::size_t replies) = 0;
};

struct SlotReading {
    SlotKind state = SlotKind::Vacant;
    bool mine = false; // held by the caller whose token was presented
};

struct Registered {
    std::string id;
    std::string token; // device token for spaces, access token for motorists
};


/// What the simulator needs from the cloud: the motorist API and the
/// device-link endpoint.
class CloudPort {
public:
    virtual ~CloudPort() = default;

    /// Moves the cloud clock, where the cloud has one we control.
    virtual void set_time(Timestamp) {}

    virtual Registered register_space(const SpaceSpec& spec) = 0;
    virtual Registered register_motorist(const MotoristProfile& profile) = 0;
    /// Reservation id, or the error code.
    virtual std::variant<ReservationId, std::string> reserve(const std::string& token,
                                                             const SpaceId& space, SlotNo slot) = 0;
    /// nullopt on success, else the error code.
    virtual std::optional<std::string> cancel(const std::string& token,
                                              const ReservationId& reservation) = 0;
    virtual std::vector<SlotReading> slots(const SpaceId& space,
                                           const std::optional<std::string>& token) = 0;
    virtual link::EdgeTelemetry telemetry(const SpaceId& space) = 0;
    virtual std::unique_ptr<LinkStream> connect() = 0;
};

/// The whole cloud in this process, on a manual clock the simulator drives.
class InProcessCloud final : public CloudPort {
public:
    explicit InProcessCloud(EngineConfig config = {}, std::uint64_t token_seed = 0,
                            Duration heartbeat_interval = std::chrono::seconds{5});

    api::ParkingService& service() { return *service_; }
    link::DeviceHub& hub() { return hub_; }

    void set_time(Timestamp t) override { clock_.set(t); }
    Registered register_space(const SpaceSpec& spec) override;
    Registered register_motorist(const MotoristProfile& profile) override;
    std::variant<ReservationId, std::string> reserve(const std::string& token,
                                                     const SpaceId& space, SlotNo slot) override;
    std::optional<std::string> cancel(const std::string& token,
                                      const ReservationId& reservation) override;
    std::vector<SlotReading> slots(const SpaceId& space,
                                   const std::optional<std::string>& token) override;
    link::EdgeTelemetry telemetry(const SpaceId& space) override;
    std::unique_ptr<LinkStream> connect() override;

private:
    ManualClock clock_;
    link::DeviceHub hub_;
    std::unique_ptr<api::ParkingService> service_;
};

/// A running `parkctl serve`, reached over HTTP and the device-link TCP port.
/// The remote clock is real time; the simulator's virtual clock only governs
/// the edge side.
class RemoteCloud final : public CloudPort {
public:
    /// `http_addr` is HOST:PORT. The device-link address comes from GET /info
    /// unless given.
    RemoteCloud(const std::string& http_addr, std::optional<std::string> device_addr = std::nullopt);
    ~RemoteCloud() override;

    Registered register_space(const SpaceSpec& spec) override;
    Registered register_motorist(const MotoristProfile& profile) override;
    std::variant<ReservationId, std::string> reserve(const std::string& token,
                                                     const SpaceId& space, SlotNo slot) override;
    std::optional<std::string> cancel(const std::string& token,
                                      const ReservationId& reservation) override;
    std::vector<SlotReading> slots(const SpaceId& space,
                                   const std::optional<std::string>& token) override;
    link::EdgeTelemetry telemetry(const SpaceId& space) override;
    std::unique_ptr<LinkStream> connect() override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace parking::sim
