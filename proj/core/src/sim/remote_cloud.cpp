#include <httplib.h>

#include "parking/sim/cloud.hpp"

#include "parking/api/requests.hpp"
#include "parking/link/tcp.hpp"

namespace parking::sim {

namespace {

constexpr std::chrono::milliseconds kReplyTimeout{2000};

class TcpStream final : public LinkStream {
public:
    TcpStream(const std::string& host, std::uint16_t port) : client_(host, port) {}

    std::vector<std::string> exchange(std::string_view bytes, std::size_t replies) override {
        client_.send(bytes);
        std::vector<std::string> lines;
        while (lines.size() < replies) {
            auto line = client_.read_line(kReplyTimeout);
            if (!line) break;
            lines.push_back(std::move(*line));
        }
        if (client_.eof() && lines.size() < replies) throw CloudUnavailable("device link closed");
        return lines;
    }

private:
    link::TcpLineClient client_;
};

std::string error_code(const httplib::Result& r) {
    if (!r) return "Unreachable";
    json j = json::parse(r->body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"];
    return "HTTP " + std::to_string(r->status);
}

httplib::Headers auth(const std::optional<std::string>& token) {
    if (!token) return {};
    return {{"Authorization", "Bearer " + *token}};
}

} // namespace

struct RemoteCloud::Impl {
    explicit Impl(const std::string& addr) : http("http://" + addr) {
        http.set_connection_timeout(std::chrono::seconds{5});
        http.set_read_timeout(std::chrono::seconds{10});
    }

    json get(const std::string& path, const std::optional<std::string>& token = std::nullopt) {
        auto r = http.Get(path, auth(token));
        if (!r || r->status != 200) throw CloudUnavailable("GET " + path + ": " + error_code(r));
        return json::parse(r->body);
    }

    httplib::Client http;
    std::string device_host;
    std::uint16_t device_port = 0;
};

RemoteCloud::RemoteCloud(const std::string& http_addr, std::optional<std::string> device_addr)
    : impl_(std::make_unique<Impl>(http_addr)) {
    std::string dev;
    if (device_addr) {
        dev = *device_addr;
    } else {
        dev = impl_->get("/info").at("device_link").get<std::string>();
    }
    auto [host, port] = link::split_host_port(dev);
    if (host == "0.0.0.0") host = link::split_host_port(http_addr).first;
    impl_->device_host = host;
    impl_->device_port = port;
}

RemoteCloud::~RemoteCloud() = default;

Registered RemoteCloud::register_space(const SpaceSpec& spec) {
    auto r = impl_->http.Post("/spaces", api::to_request_json(spec).dump(), "application/json");
    if (!r || r->status != 201) throw CloudUnavailable("POST /spaces: " + error_code(r));
    const json j = json::parse(r->body);
    return {j.at("space").at("space_id").get<std::string>(), j.at("device_token").get<std::string>()};
}

Registered RemoteCloud::register_motorist(const MotoristProfile& profile) {
    auto r = impl_->http.Post("/motorists", api::to_request_json(profile).dump(), "application/json");
    if (!r || r->status != 201) throw CloudUnavailable("POST /motorists: " + error_code(r));
    const json j = json::parse(r->body);
    return {j.at("motorist").at("motorist_id").get<std::string>(),
            j.at("access_token").get<std::string>()};
}

std::variant<ReservationId, std::string> RemoteCloud::reserve(const std::string& token,
                                                              const SpaceId& space, SlotNo slot) {
    auto r = impl_->http.Post("/spaces/" + space.value + "/reservations", auth(token),
                              json{{"slot_no", slot}}.dump(), "application/json");
    if (!r || r->status != 201) return error_code(r);
    return ReservationId{json::parse(r->body).at("reservation_id").get<std::string>()};
}

std::optional<std::string> RemoteCloud::cancel(const std::string& token,
                                               const ReservationId& reservation) {
    auto r = impl_->http.Delete("/reservations/" + reservation.value, auth(token));
    if (!r || r->status != 204) return error_code(r);
    return std::nullopt;
}

std::vector<SlotReading> RemoteCloud::slots(const SpaceId& space,
                                            const std::optional<std::string>& token) {
    const json j = impl_->get("/spaces/" + space.value, token);
    std::vector<SlotReading> out;
    for (const auto& s : j.at("slots")) {
        auto kind = parse_slot_kind(s.at("state").get<std::string>());
        out.push_back({kind.value_or(SlotKind::Vacant), s.at("reserved_by_me").get<bool>()});
    }
    return out;
}

link::EdgeTelemetry RemoteCloud::telemetry(const SpaceId& space) {
    const json j = impl_->get("/spaces/" + space.value);
    const json& e = j.at("edge");
    link::EdgeTelemetry t;
    t.confirmed_entries = e.at("confirmed_entries").get<std::size_t>();
    t.confirmed_exits = e.at("confirmed_exits").get<std::size_t>();
    t.updates_applied = t.confirmed_entries + t.confirmed_exits;
    return t;
}

std::unique_ptr<LinkStream> RemoteCloud::connect() {
    try {
        return std::make_unique<TcpStream>(impl_->device_host, impl_->device_port);
    } catch (const link::NetError& e) {
        throw CloudUnavailable(e.what());
    }
}

} // namespace parking::sim
