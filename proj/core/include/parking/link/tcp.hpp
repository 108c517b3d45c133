#pragma once

#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

namespace parking::link {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Device-link listener: one thread per edge connection, each driving its own
/// LinkSession.
class LinkServer {
public:
    LinkServer(api::ParkingService& service, DeviceHub& hub) : service_(service), hub_(hub) {}
    ~LinkServer();

    LinkServer(const LinkServer&) = delete;
    LinkServer& operator=(const LinkServer&) = delete;

    /// Binds and listens; port 0 picks a free port. Returns the bound port.
    /// Throws NetError.
    std::uint16_t listen(const std::string& host, std::uint16_t port);
    void start();
    void stop();

private:
    struct Conn {
        int fd = -1;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void serve(Conn& conn);
    void reap(bool all);

    api::ParkingService& service_;
    DeviceHub& hub_;
    int listen_fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex conns_mu_;
    std::list<Conn> conns_;
};

/// Blocking line-oriented client socket.
class TcpLineClient {
public:
    /// Throws NetError when the connection cannot be made.
    TcpLineClient(const std::string& host, std::uint16_t port);
    ~TcpLineClient();

    TcpLineClient(const TcpLineClient&) = delete;
    TcpLineClient& operator=(const TcpLineClient&) = delete;

    void send(std::string_view bytes);
    /// Next '\n'-terminated line (without the newline); nullopt on timeout or EOF.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);
    bool eof() const { return eof_; }

private:
    int fd_ = -1;
    std::string buf_;
    bool eof_ = false;
};

/// Splits "host:port". Throws NetError.
std::pair<std::string, std::uint16_t> split_host_port(std::string_view addr);

} // namespace parking::link
