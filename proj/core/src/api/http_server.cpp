#define CPPHTTPLIB_THREAD_POOL_COUNT 32
#include <httplib.h>

#include "parking/api/http_server.hpp"

#include "parking/api/requests.hpp"
#include "parking/domain/errors.hpp"
#include "parking/json.hpp"

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <list>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace parking::api {

namespace {

constexpr auto kJson = "application/json";
constexpr Duration kStreamPoll{200};

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidCapacity:
    case ErrorCode::InvalidCoordinates:
    case ErrorCode::InvalidTariff:
    case ErrorCode::InvalidProfile:
    case ErrorCode::MalformedUid: return 422;
    case ErrorCode::DuplicateCredential:
    case ErrorCode::DuplicateNationalId:
    case ErrorCode::SlotNotVacant:
    case ErrorCode::MotoristHasActiveClaim:
    case ErrorCode::NotActive: return 409;
    case ErrorCode::UnknownSpace:
    case ErrorCode::UnknownSlot:
    case ErrorCode::UnknownMotorist:
    case ErrorCode::UnknownReservation: return 404;
    case ErrorCode::NotOwner: return 403;
    case ErrorCode::NegativeDuration:
    case ErrorCode::InvalidEvent: break;
    }
    return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, int status, std::string_view code, std::string_view detail) {
    reply(res, status, json{{"error", code}, {"detail", detail}});
}

json public_motorist(const Motorist& m) {
    json j = m;
    j.erase("access_token");
    return j;
}

json slot_view(SlotNo n, SlotKind kind, bool mine) {
    return json{{"slot_no", n},
                {"state", to_string(kind)},
                {"color", slot_color(kind)},
                {"reserved_by_me", mine}};
}

json claim_json(const std::optional<Claim>& claim) {
    if (!claim) return nullptr;
    return std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            json j = c;
            j["kind"] = std::is_same_v<T, Reservation> ? "reservation" : "session";
            return j;
        },
        *claim);
}

std::optional<std::string> bearer(const httplib::Request& req) {
    const auto h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    return h.substr(prefix.size());
}

} // namespace

struct HttpServer::Impl {
    Impl(ParkingService& s, link::DeviceHub& h, HttpOptions o)
        : service(s), hub(h), options(std::move(o)) {}

    ParkingService& service;
    link::DeviceHub& hub;
    HttpOptions options;
    httplib::Server server;
    std::thread server_thread;
    std::thread ticker;
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<bool> stopping{false};
    std::list<std::weak_ptr<Subscription>> streams;

    /// Runs `fn`, turning domain and schema errors into HTTP errors.
    template <typename Fn>
    void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const DomainError& e) {
            fail(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const SchemaError& e) {
            fail(res, 422, "SchemaError", e.what());
        } catch (const std::exception& e) {
            fail(res, 500, "InternalError", e.what());
        }
    }

    std::optional<json> body(const httplib::Request& req, httplib::Response& res) {
        json j = json::parse(req.body, nullptr, false);
        if (j.is_discarded()) {
            fail(res, 400, "BadJson", "request body is not valid JSON");
            return std::nullopt;
        }
        return j;
    }

    /// nullopt with a 401 already written when the token is missing or bad.
    std::optional<MotoristId> caller(const httplib::Request& req, httplib::Response& res) {
        const auto token = bearer(req);
        auto who = token ? service.authenticate(*token) : std::nullopt;
        if (!who) fail(res, 401, "Unauthorized", "missing or unknown bearer token");
        return who;
    }

    /// Like caller(), but anonymous requests are fine.
    bool optional_caller(const httplib::Request& req, httplib::Response& res,
                         std::optional<MotoristId>& who) {
        if (!req.has_header("Authorization")) return true;
        who = caller(req, res);
        return who.has_value();
    }

    json summary(const SpaceSummary& s, Timestamp now) const {
        const auto last = hub.last_heartbeat(s.space_id);
        const auto t = hub.telemetry(s.space_id);
        return json{
            {"space_id", s.space_id},
            {"name", s.name},
            {"location", s.location},
            {"admin", s.admin},
            {"tariff", s.tariff},
            {"currency", s.currency},
            {"capacity", s.capacity},
            {"vacant", s.counts.vacant},
            {"reserved", s.counts.reserved},
            {"occupied", s.counts.occupied},
            {"reservation_ttl_s",
             std::chrono::duration_cast<std::chrono::seconds>(service.config().reservation_ttl).count()},
            {"edge",
             {{"liveness", link::to_string(hub.liveness(s.space_id, now))},
              {"last_heartbeat", last ? timestamp_to_json(*last) : json(nullptr)},
              {"confirmed_entries", t.confirmed_entries},
              {"confirmed_exits", t.confirmed_exits}}}};
    }

    json stream_line(const StreamEvent& e, const std::optional<MotoristId>& who) const {
        return json{{"seq", e.seq},
                    {"timestamp", timestamp_to_json(e.at)},
                    {"space_id", e.space_id},
                    {"slot_no", e.slot_no},
                    {"cause", to_string(e.cause)},
                    {"slot", slot_view(e.slot_no, e.state, who && e.holder == who)}};
    }

    void routes();
    void events(const httplib::Request& req, httplib::Response& res);
};

void HttpServer::Impl::routes() {
    server.Post("/spaces", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = body(req, res);
        if (!j) return;
        guarded(res, [&] {
            const auto space = service.register_space(space_spec_from_json(*j));
            const auto counts = count_slots(space);
            SpaceSummary s{space.space_id, space.name,     space.location,   space.admin,
                           space.tariff,   space.currency, space.capacity(), counts};
            reply(res, 201, json{{"space", summary(s, service.now())},
                                 {"device_token", space.device_token}});
        });
    });

    server.Get("/spaces", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            const auto now = service.now();
            json out = json::array();
            for (const auto& s : service.list_spaces()) out.push_back(summary(s, now));
            reply(res, 200, out);
        });
    });

    server.Get(R"(/spaces/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<MotoristId> who;
        if (!optional_caller(req, res, who)) return;
        guarded(res, [&] {
            const SpaceId id{req.matches[1]};
            const auto view = service.space_view(id);
            if (!view) {
                fail(res, 404, to_string(ErrorCode::UnknownSpace), id.value);
                return;
            }
            const auto& sp = view->space;
            SpaceSummary s{sp.space_id, sp.name,     sp.location,   sp.admin,
                           sp.tariff,   sp.currency, sp.capacity(), count_slots(sp)};
            json j = summary(s, service.now());
            json slots = json::array();
            for (SlotNo n = 1; n <= sp.capacity(); ++n) {
                const bool mine = who && view->holders[n - 1] == who;
                slots.push_back(slot_view(n, kind_of(sp.slots[n - 1]), mine));
            }
            j["slots"] = std::move(slots);
            reply(res, 200, j);
        });
    });

    server.Post(R"(/spaces/([^/]+)/reservations)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    const auto who = caller(req, res);
                    if (!who) return;
                    auto j = body(req, res);
                    if (!j) return;
                    guarded(res, [&] {
                        if (!j->is_object() || !j->contains("slot_no") ||
                            !(*j)["slot_no"].is_number_unsigned()) {
                            throw SchemaError("\"slot_no\" must be a positive integer");
                        }
                        const auto slot = (*j)["slot_no"].get<std::uint64_t>();
                        if (slot == 0 || slot > UINT32_MAX) {
                            throw DomainError(ErrorCode::UnknownSlot, std::to_string(slot));
                        }
                        const auto r = service.reserve(*who, SpaceId{req.matches[1]},
                                                       static_cast<SlotNo>(slot));
                        reply(res, 201, json(r));
                    });
                });

    server.Delete(R"(/reservations/([^/]+))",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      const auto who = caller(req, res);
                      if (!who) return;
                      guarded(res, [&] {
                          service.cancel(*who, ReservationId{req.matches[1]});
                          res.status = 204;
                      });
                  });

    server.Post("/motorists", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = body(req, res);
        if (!j) return;
        guarded(res, [&] {
            const auto m = service.register_motorist(motorist_profile_from_json(*j));
            reply(res, 201, json{{"motorist", public_motorist(m)}, {"access_token", m.access_token}});
        });
    });

    server.Put(R"(/motorists/([^/]+)/card)", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
        const auto who = caller(req, res);
        if (!who) return;
        auto j = body(req, res);
        if (!j) return;
        guarded(res, [&] {
            const MotoristId target{req.matches[1]};
            if (target != *who) {
                fail(res, 403, "Forbidden", "a card can only be bound by its motorist");
                return;
            }
            if (!j->is_object() || !j->contains("rfid_uid") || !(*j)["rfid_uid"].is_string()) {
                throw SchemaError("\"rfid_uid\" must be a string");
            }
            const auto m = service.bind_card(target, (*j)["rfid_uid"].get<std::string>());
            reply(res, 200, public_motorist(m));
        });
    });

    server.Get("/me", [this](const httplib::Request& req, httplib::Response& res) {
        const auto who = caller(req, res);
        if (!who) return;
        guarded(res, [&] {
            const auto m = service.motorist(*who);
            if (!m) {
                fail(res, 404, to_string(ErrorCode::UnknownMotorist), who->value);
                return;
            }
            reply(res, 200, json{{"motorist", public_motorist(*m)},
                                 {"active_claim", claim_json(service.active_claim(*who))}});
        });
    });

    server.Get("/info", [this](const httplib::Request&, httplib::Response& res) {
        const auto& cfg = service.config();
        std::lock_guard lock(mu);
        reply(res, 200,
              json{{"device_link", options.device_link_addr},
                   {"heartbeat_interval_ms", hub.heartbeat_interval().count()},
                   {"reservation_ttl_s",
                    std::chrono::duration_cast<std::chrono::seconds>(cfg.reservation_ttl).count()},
                   {"allow_walk_in", cfg.allow_walk_in},
                   {"last_event_seq", service.events().last_seq()}});
    });

    server.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
        events(req, res);
    });
}

void HttpServer::Impl::events(const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    if (req.has_param("since")) {
        const auto v = req.get_param_value("since");
        auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), since);
        if (ec != std::errc{} || end != v.data() + v.size()) {
            fail(res, 400, "BadRequest", "since must be a non-negative integer");
            return;
        }
    }
    std::optional<MotoristId> who;
    if (!optional_caller(req, res, who)) return;

    auto sub = service.events().subscribe(since);
    {
        std::lock_guard lock(mu);
        streams.remove_if([](const auto& w) { return w.expired(); });
        streams.push_back(sub);
    }
    const Duration beat = options.stream_heartbeat;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, sub, who, beat](std::size_t, httplib::DataSink& sink) {
            auto idle = Duration{0};
            while (!stopping) {
                auto e = sub->next(std::min(kStreamPoll, beat));
                if (e) {
                    const std::string line = stream_line(*e, who).dump() + "\n";
                    if (!sink.write(line.data(), line.size())) return false;
                    idle = Duration{0};
                    // Keep draining whatever is already queued before returning.
                    continue;
                }
                if (sub->closed()) break;
                idle += std::min(kStreamPoll, beat);
                if (idle >= beat) {
                    static constexpr std::string_view hb = ": heartbeat\n";
                    if (!sink.write(hb.data(), hb.size())) return false;
                    idle = Duration{0};
                    return true;
                }
            }
            sink.done();
            return true;
        },
        [sub](bool) { sub->close(); });
}

HttpServer::HttpServer(ParkingService& service, link::DeviceHub& hub, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, hub, std::move(options))) {
    impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::listen(const std::string& host, std::uint16_t port) {
    const std::string h = host.empty() ? "0.0.0.0" : host;
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(h);
        if (p <= 0) throw std::runtime_error("cannot bind HTTP on " + h);
        return static_cast<std::uint16_t>(p);
    }
    if (!impl_->server.bind_to_port(h, port)) {
        throw std::runtime_error("cannot bind HTTP on " + h + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::start() {
    Impl& d = *impl_;
    d.server_thread = std::thread([&d] { d.server.listen_after_bind(); });
    d.ticker = std::thread([&d] {
        std::unique_lock lock(d.mu);
        while (!d.stopping) {
            d.cv.wait_for(lock, d.options.expiry_tick);
            if (d.stopping) break;
            lock.unlock();
            try {
                d.service.expire_due();
            } catch (const std::exception&) {
                // A failing store surfaces on the next mutating request.
            }
            lock.lock();
        }
    });
    d.server.wait_until_ready();
}

void HttpServer::stop() {
    Impl& d = *impl_;
    {
        std::lock_guard lock(d.mu);
        if (d.stopping.exchange(true)) return;
        for (auto& w : d.streams) {
            if (auto s = w.lock()) s->close();
        }
    }
    d.cv.notify_all();
    d.server.stop();
    if (d.server_thread.joinable()) d.server_thread.join();
    if (d.ticker.joinable()) d.ticker.join();
}

void HttpServer::set_device_link_addr(std::string addr) {
    std::lock_guard lock(impl_->mu);
    impl_->options.device_link_addr = std::move(addr);
}

} // namespace parking::api
