#include "parking/sim/cloud.hpp"

#include "parking/domain/errors.hpp"

namespace parking::sim {

namespace {

class InProcessStream final : public LinkStream {
public:
    InProcessStream(api::ParkingService& service, link::DeviceHub& hub) : session_(service, hub) {}

    std::vector<std::string> exchange(std::string_view bytes, std::size_t) override {
        std::vector<std::string> lines;
        const std::string out = session_.on_bytes(bytes);
        std::size_t start = 0;
        while (start < out.size()) {
            const auto nl = out.find('\n', start);
            lines.push_back(out.substr(start, nl - start));
            if (nl == std::string::npos) break;
            start = nl + 1;
        }
        return lines;
    }

private:
    link::LinkSession session_;
};

} // namespace

InProcessCloud::InProcessCloud(EngineConfig config, std::uint64_t token_seed,
                               Duration heartbeat_interval)
    : hub_(heartbeat_interval) {
    store::StoreOptions options;
    options.engine = config;
    service_ = std::make_unique<api::ParkingService>(store::Store::in_memory(options), clock_,
                                                     token_seed);
}

Registered InProcessCloud::register_space(const SpaceSpec& spec) {
    const auto s = service_->register_space(spec);
    return {s.space_id.value, s.device_token};
}

Registered InProcessCloud::register_motorist(const MotoristProfile& profile) {
    const auto m = service_->register_motorist(profile);
    return {m.motorist_id.value, m.access_token};
}

std::variant<ReservationId, std::string> InProcessCloud::reserve(const std::string& token,
                                                                 const SpaceId& space, SlotNo slot) {
    auto who = service_->authenticate(token);
    if (!who) return std::string("Unauthorized");
    try {
        return service_->reserve(*who, space, slot).reservation_id;
    } catch (const DomainError& e) {
        return std::string(to_string(e.code()));
    }
}

std::optional<std::string> InProcessCloud::cancel(const std::string& token,
                                                  const ReservationId& reservation) {
    auto who = service_->authenticate(token);
    if (!who) return std::string("Unauthorized");
    try {
        service_->cancel(*who, reservation);
        return std::nullopt;
    } catch (const DomainError& e) {
        return std::string(to_string(e.code()));
    }
}

std::vector<SlotReading> InProcessCloud::slots(const SpaceId& space,
                                               const std::optional<std::string>& token) {
    const auto s = service_->space(space);
    if (!s) return {};
    const auto who = token ? service_->authenticate(*token) : std::nullopt;
    std::vector<SlotReading> out;
    for (SlotNo n = 1; n <= s->capacity(); ++n) {
        SlotReading r{kind_of(s->slots[n - 1]), false};
        if (who && r.state != SlotKind::Vacant) r.mine = service_->slot_holder(space, n) == who;
        out.push_back(r);
    }
    return out;
}

link::EdgeTelemetry InProcessCloud::telemetry(const SpaceId& space) { return hub_.telemetry(space); }

std::unique_ptr<LinkStream> InProcessCloud::connect() {
    return std::make_unique<InProcessStream>(*service_, hub_);
}

} // namespace parking::sim
