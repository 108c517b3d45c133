#include "parking/link/tcp.hpp"

#include "parking/link/session.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace parking::link {

namespace {

constexpr int kPollMs = 100;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

bool write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

} // namespace

std::pair<std::string, std::uint16_t> split_host_port(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos) throw NetError("expected HOST:PORT, got " + std::string(addr));
    unsigned port = 0;
    const auto p = addr.substr(colon + 1);
    auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (ec != std::errc{} || end != p.data() + p.size() || port > 65535) {
        throw NetError("bad port in " + std::string(addr));
    }
    std::string host(addr.substr(0, colon));
    if (host.empty()) host = "0.0.0.0";
    return {host, static_cast<std::uint16_t>(port)};
}

LinkServer::~LinkServer() { stop(); }

std::uint16_t LinkServer::listen(const std::string& host, std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw NetError(errno_text("socket"));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) != 1) {
        throw NetError("bad listen address " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        throw NetError(errno_text("bind"));
    }
    if (::listen(listen_fd_, 64) < 0) throw NetError(errno_text("listen"));

    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

void LinkServer::start() {
    if (listen_fd_ < 0) throw NetError("listen() first");
    acceptor_ = std::thread([this] { accept_loop(); });
}

void LinkServer::stop() {
    stopping_ = true;
    if (acceptor_.joinable()) acceptor_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    reap(true);
}

void LinkServer::reap(bool all) {
    std::lock_guard lock(conns_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
        if (all || it->done) {
            if (it->thread.joinable()) it->thread.join();
            it = conns_.erase(it);
        } else {
            ++it;
        }
    }
}

void LinkServer::accept_loop() {
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, kPollMs);
        reap(false);
        if (r <= 0) continue;
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(conns_mu_);
        auto& conn = conns_.emplace_back();
        conn.fd = fd;
        conn.thread = std::thread([this, &conn] { serve(conn); });
    }
}

void LinkServer::serve(Conn& conn) {
    LinkSession session(service_, hub_);
    char buf[4096];
    while (!stopping_ && !session.closed()) {
        pollfd pfd{conn.fd, POLLIN, 0};
        const int r = ::poll(&pfd, 1, kPollMs);
        if (r < 0 && errno != EINTR) break;
        if (r <= 0) continue;
        const ssize_t n = ::recv(conn.fd, buf, sizeof(buf), 0);
        if (n <= 0) break;
        const std::string out = session.on_bytes(std::string_view(buf, static_cast<std::size_t>(n)));
        if (!out.empty() && !write_all(conn.fd, out)) break;
    }
    ::shutdown(conn.fd, SHUT_RDWR);
    ::close(conn.fd);
    conn.done = true;
}

TcpLineClient::TcpLineClient(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
        throw NetError("cannot resolve " + host);
    }
    fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
    if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) < 0) {
        const std::string msg = errno_text("connect");
        ::freeaddrinfo(res);
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        throw NetError(msg + " (" + host + ":" + service + ")");
    }
    ::freeaddrinfo(res);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpLineClient::~TcpLineClient() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpLineClient::send(std::string_view bytes) {
    if (!write_all(fd_, bytes)) eof_ = true;
}

std::optional<std::string> TcpLineClient::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto nl = buf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buf_.substr(0, nl);
            buf_.erase(0, nl + 1);
            return line;
        }
        if (eof_) return std::nullopt;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        pollfd pfd{fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) return std::nullopt;
        char tmp[4096];
        const ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
        if (n <= 0) {
            eof_ = true;
            continue;
        }
        buf_.append(tmp, static_cast<std::size_t>(n));
    }
}

} // namespace parking::link
