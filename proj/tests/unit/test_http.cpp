#include <httplib.h>

#include "parking/api/http_server.hpp"
#include "parking/api/requests.hpp"
#include "parking/store/event_log.hpp"

#include "../support/tempdir.hpp"
#include "../support/world.hpp"

#include <doctest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>

using namespace parking;

namespace {

struct Api {
    ManualClock clock{from_millis(support::World::kStart)};
    api::ParkingService service;
    link::DeviceHub hub;
    api::HttpServer server{service, hub, api::HttpOptions{std::chrono::seconds{1}, Duration{20}, "127.0.0.1:7700"}};
    std::uint16_t port = server.listen("127.0.0.1", 0);
    httplib::Client client{"127.0.0.1", port};

    explicit Api(std::unique_ptr<store::Store> st = store::Store::in_memory())
        : service(std::move(st), clock, 7) {
        server.start();
    }
    ~Api() { server.stop(); }

    httplib::Headers auth(const std::string& token) const {
        return {{"Authorization", "Bearer " + token}};
    }

    json post(const std::string& path, const json& body, const std::string& token, int want) {
        auto res = client.Post(path, auth(token), body.dump(), "application/json");
        REQUIRE(res);
        CHECK_MESSAGE(res->status == want, res->body);
        return res->body.empty() ? json() : json::parse(res->body);
    }

    std::string add_lot(const std::string& name, std::uint32_t cap) {
        auto res = client.Post("/spaces", api::to_request_json(support::lot_spec(name, cap)).dump(),
                               "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 201);
        return json::parse(res->body).at("space").at("space_id").get<std::string>();
    }

    /// (motorist id, token)
    std::pair<std::string, std::string> add_driver(int i) {
        auto res = client.Post("/motorists", api::to_request_json(support::driver_profile(i)).dump(),
                               "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 201);
        const auto j = json::parse(res->body);
        CHECK_FALSE(j.at("motorist").contains("access_token"));
        return {j.at("motorist").at("motorist_id").get<std::string>(),
                j.at("access_token").get<std::string>()};
    }

    std::vector<std::string> colours(const std::string& space, const std::string& token = {}) {
        auto res = token.empty() ? client.Get("/spaces/" + space)
                                 : client.Get("/spaces/" + space, auth(token));
        REQUIRE(res);
        REQUIRE(res->status == 200);
        std::vector<std::string> out;
        const auto j = json::parse(res->body);
        for (const auto& s : j.at("slots")) out.push_back(s.at("color"));
        return out;
    }

    /// Reads the stream from `since` until `count` event lines have arrived.
    std::vector<json> stream(std::uint64_t since, std::size_t count) {
        httplib::Client c{"127.0.0.1", port};
        c.set_read_timeout(5, 0);
        std::string buf;
        std::vector<json> lines;
        if (count == 0) return lines;
        c.Get("/events?since=" + std::to_string(since),
              [&](const char* data, std::size_t n) {
                  buf.append(data, n);
                  std::size_t nl;
                  while ((nl = buf.find('\n')) != std::string::npos) {
                      const auto line = buf.substr(0, nl);
                      buf.erase(0, nl + 1);
                      if (!line.empty() && line[0] != ':') lines.push_back(json::parse(line));
                  }
                  return lines.size() < count;
              });
        return lines;
    }
};

} // namespace

TEST_CASE("http: registration and listing") {
    Api a;
    auto res = a.client.Post("/spaces", api::to_request_json(support::lot_spec("North", 3)).dump(),
                             "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const auto created = json::parse(res->body);
    CHECK(created.at("device_token").get<std::string>().size() >= 16);
    CHECK(created.at("space").at("vacant") == 3);

    res = a.client.Get("/spaces");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto list = json::parse(res->body);
    REQUIRE(list.size() == 1);
    CHECK(list[0].at("capacity") == 3);
    CHECK(list[0].at("reservation_ttl_s") == 1800);
    CHECK(list[0].at("edge").at("liveness") == "offline");
    CHECK(a.colours(list[0].at("space_id")) == std::vector<std::string>(3, "green"));

    auto bad = api::to_request_json(support::lot_spec("Zero", 1));
    bad["capacity"] = 0;
    res = a.client.Post("/spaces", bad.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body).at("error") == "InvalidCapacity");

    res = a.client.Post("/spaces", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = a.client.Get("/spaces/nope");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).at("error") == "UnknownSpace");

    a.add_driver(1);
    res = a.client.Post("/motorists", api::to_request_json(support::driver_profile(1)).dump(),
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
}

TEST_CASE("http: reservation lifecycle and status codes") {
    Api a;
    const auto lot = a.add_lot("North", 2);
    const auto [me, token] = a.add_driver(1);
    const auto [other, other_token] = a.add_driver(2);

    auto res = a.client.Post("/spaces/" + lot + "/reservations", json{{"slot_no", 1}}.dump(),
                             "application/json");
    REQUIRE(res);
    CHECK(res->status == 401);
    res = a.client.Post("/spaces/" + lot + "/reservations", a.auth("bogus"),
                        json{{"slot_no", 1}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 401);

    const auto r = a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, token, 201);
    const auto rid = r.at("reservation_id").get<std::string>();
    CHECK(a.colours(lot) == std::vector<std::string>{"orange", "green"});

    // Only the holder sees the slot as theirs.
    auto view = json::parse(a.client.Get("/spaces/" + lot, a.auth(token))->body);
    CHECK(view.at("slots")[0].at("reserved_by_me") == true);
    view = json::parse(a.client.Get("/spaces/" + lot, a.auth(other_token))->body);
    CHECK(view.at("slots")[0].at("reserved_by_me") == false);

    CHECK(a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, other_token, 409)
              .at("error") == "SlotNotVacant");
    CHECK(a.post("/spaces/" + lot + "/reservations", {{"slot_no", 2}}, token, 409)
              .at("error") == "MotoristHasActiveClaim");
    CHECK(a.post("/spaces/" + lot + "/reservations", {{"slot_no", 3}}, other_token, 404)
              .at("error") == "UnknownSlot");
    CHECK(a.post("/spaces/nope/reservations", {{"slot_no", 1}}, other_token, 404)
              .at("error") == "UnknownSpace");
    CHECK(a.post("/spaces/" + lot + "/reservations", {{"slot", 1}}, other_token, 422)
              .at("error") == "SchemaError");

    auto me_res = a.client.Get("/me", a.auth(token));
    REQUIRE(me_res);
    CHECK(json::parse(me_res->body).at("active_claim").at("kind") == "reservation");

    res = a.client.Delete("/reservations/" + rid, a.auth(other_token));
    REQUIRE(res);
    CHECK(res->status == 403);
    res = a.client.Delete("/reservations/" + rid, a.auth(token));
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(a.colours(lot) == std::vector<std::string>{"green", "green"});
    res = a.client.Delete("/reservations/" + rid, a.auth(token));
    REQUIRE(res);
    CHECK(res->status == 409);
    res = a.client.Delete("/reservations/missing", a.auth(token));
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("http: card binding") {
    Api a;
    const auto [me, token] = a.add_driver(1);
    const auto [other, other_token] = a.add_driver(2);
    auto res = a.client.Put("/motorists/" + me + "/card", a.auth(token),
                            json{{"rfid_uid", "04a1b2c3d4e5f6"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("rfid_uid") == "04A1B2C3D4E5F6");

    res = a.client.Put("/motorists/" + me + "/card", a.auth(other_token),
                       json{{"rfid_uid", "11223344"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 403);
    res = a.client.Put("/motorists/" + other + "/card", a.auth(other_token),
                       json{{"rfid_uid", "04A1B2C3D4E5F6"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
    res = a.client.Put("/motorists/" + other + "/card", a.auth(other_token),
                       json{{"rfid_uid", "XYZ"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    res = a.client.Put("/motorists/" + other + "/card", json{{"rfid_uid", "11223344"}}.dump(),
                       "application/json");
    REQUIRE(res);
    CHECK(res->status == 401);
}

TEST_CASE("http: gate traffic turns slots red then green") {
    Api a;
    const auto lot = a.add_lot("North", 2);
    const auto [me, token] = a.add_driver(1);
    a.post("/spaces/" + lot + "/reservations", {{"slot_no", 2}}, token, 201);
    const auto uid = RfidUid::from(support::card_hex(1));
    REQUIRE(std::holds_alternative<Accepted>(a.service.check_in(SpaceId{lot}, uid).decision));
    CHECK(a.colours(lot) == std::vector<std::string>{"green", "red"});
    auto list = json::parse(a.client.Get("/spaces")->body);
    CHECK(list[0].at("occupied") == 1);
    CHECK(json::parse(a.client.Get("/me", a.auth(token))->body).at("active_claim").at("kind") ==
          "session");
    a.clock.advance(std::chrono::minutes{30});
    REQUIRE(std::holds_alternative<Accepted>(a.service.check_out(SpaceId{lot}, uid).decision));
    CHECK(a.colours(lot) == std::vector<std::string>{"green", "green"});
}

TEST_CASE("http: info") {
    Api a;
    auto res = a.client.Get("/info");
    REQUIRE(res);
    const auto j = json::parse(res->body);
    CHECK(j.at("device_link") == "127.0.0.1:7700");
    CHECK(j.at("heartbeat_interval_ms") == 5000);
    CHECK(j.at("allow_walk_in") == false);
    CHECK(j.at("last_event_seq") == 0);
    a.server.set_device_link_addr("10.0.0.2:9000");
    CHECK(json::parse(a.client.Get("/info")->body).at("device_link") == "10.0.0.2:9000");
}

TEST_CASE("http: due reservations expire without traffic") {
    Api a;
    const auto lot = a.add_lot("North", 1);
    const auto [me, token] = a.add_driver(1);
    a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, token, 201);
    a.clock.advance(std::chrono::minutes{30} + Duration{1});
    const auto lines = a.stream(0, 2);
    REQUIRE(lines.size() == 2);
    CHECK(lines[1].at("cause") == "expired");
    CHECK(lines[1].at("slot").at("color") == "green");
}

TEST_CASE("http: event stream resumes from any point") {
    Api a;
    const auto lot = a.add_lot("North", 2);
    std::vector<std::string> tokens;
    for (int i = 1; i <= 3; ++i) tokens.push_back(a.add_driver(i).second);
    const auto r1 = a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, tokens[0], 201);
    a.post("/spaces/" + lot + "/reservations", {{"slot_no", 2}}, tokens[1], 201);
    a.client.Delete("/reservations/" + r1.at("reservation_id").get<std::string>(),
                    a.auth(tokens[0]));
    a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, tokens[2], 201);
    const std::uint64_t last = 4;
    REQUIRE(json::parse(a.client.Get("/info")->body).at("last_event_seq") == last);

    for (std::uint64_t since = 0; since < last; ++since) {
        const auto lines = a.stream(since, last - since);
        REQUIRE(lines.size() == last - since);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            CHECK(lines[i].at("seq") == since + 1 + i);
        }
    }
    const auto all = a.stream(0, last);
    CHECK(all[0].at("cause") == "reserved");
    CHECK(all[2].at("cause") == "cancelled");
    CHECK(all[2].at("slot").at("color") == "green");

    // A live subscriber sees changes made after it connected.
    std::vector<json> live;
    std::thread reader([&] { live = a.stream(last, 1); });
    std::this_thread::sleep_for(std::chrono::milliseconds{100});
    const auto me = json::parse(a.client.Get("/me", a.auth(tokens[1]))->body);
    a.client.Delete("/reservations/" +
                        me.at("active_claim").at("reservation_id").get<std::string>(),
                    a.auth(tokens[1]));
    reader.join();
    REQUIRE(live.size() == 1);
    CHECK(live[0].at("seq") == last + 1);
    CHECK(live[0].at("slot_no") == 2);

    auto res = a.client.Get("/events?since=-1");
    REQUIRE(res);
    CHECK(res->status == 400);
}

TEST_CASE("http: concurrent requests for the last slot") {
    Api a;
    const auto lot = a.add_lot("North", 1);
    constexpr int kDrivers = 8;
    std::vector<std::string> tokens;
    for (int i = 1; i <= kDrivers; ++i) tokens.push_back(a.add_driver(i).second);
    std::atomic<int> created{0};
    std::atomic<int> conflicts{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < kDrivers; ++i) {
        threads.emplace_back([&, i] {
            httplib::Client c{"127.0.0.1", a.port};
            auto res = c.Post("/spaces/" + lot + "/reservations", a.auth(tokens[i]),
                              json{{"slot_no", 1}}.dump(), "application/json");
            if (res && res->status == 201) ++created;
            if (res && res->status == 409) ++conflicts;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(created == 1);
    CHECK(conflicts == kDrivers - 1);
    CHECK(a.colours(lot) == std::vector<std::string>{"orange"});
}

TEST_CASE("http: snapshot plus stream equals a later snapshot") {
    Api a;
    const std::vector<std::string> lots = {a.add_lot("North", 2), a.add_lot("South", 3)};
    std::vector<std::pair<std::string, std::string>> drivers;
    for (int i = 1; i <= 6; ++i) drivers.push_back(a.add_driver(i));
    std::mt19937_64 rng(12);
    auto roll = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    for (int round = 0; round < 10; ++round) {
        const std::uint64_t since = json::parse(a.client.Get("/info")->body).at("last_event_seq");
        std::map<std::string, std::vector<std::string>> grid;
        for (const auto& l : lots) grid[l] = a.colours(l);

        for (int i = 0; i < 20; ++i) {
            const int d = roll(0, 5);
            const auto& lot = lots[roll(0, 1)];
            const auto uid = RfidUid::from(support::card_hex(d + 1));
            switch (roll(0, 3)) {
            case 0:
                a.client.Post("/spaces/" + lot + "/reservations", a.auth(drivers[d].second),
                              json{{"slot_no", roll(1, 3)}}.dump(), "application/json");
                break;
            case 1: {
                const auto me = json::parse(a.client.Get("/me", a.auth(drivers[d].second))->body);
                const auto& c = me.at("active_claim");
                if (!c.is_null() && c.at("kind") == "reservation") {
                    a.client.Delete("/reservations/" + c.at("reservation_id").get<std::string>(),
                                    a.auth(drivers[d].second));
                }
                break;
            }
            case 2: a.service.check_in(SpaceId{lot}, uid); break;
            default: a.service.check_out(SpaceId{lot}, uid); break;
            }
            a.clock.advance(std::chrono::minutes{roll(0, 12)});
        }

        const std::uint64_t last = json::parse(a.client.Get("/info")->body).at("last_event_seq");
        for (const auto& e : a.stream(since, last - since)) {
            grid[e.at("space_id")][e.at("slot_no").get<std::size_t>() - 1] = e.at("slot").at("color");
        }
        for (const auto& l : lots) CHECK(grid[l] == a.colours(l));
    }
}

TEST_CASE("http: a 2xx mutation is already in the log") {
    support::TempDir dir;
    Api a(store::Store::open(dir.path(), store::StoreOptions{{}, true, 0, 0}));
    const auto log = dir / store::Store::kLogFile;
    const auto lot = a.add_lot("North", 1);
    CHECK(store::read_log(log).events.size() == 1);
    const auto [me, token] = a.add_driver(1);
    CHECK(store::read_log(log).events.size() == 2);
    const auto r = a.post("/spaces/" + lot + "/reservations", {{"slot_no", 1}}, token, 201);
    auto events = store::read_log(log).events;
    REQUIRE(events.size() == 3);
    CHECK(json(events.back()).at("kind") == "slot_reserved");
    auto res = a.client.Delete("/reservations/" + r.at("reservation_id").get<std::string>(),
                               a.auth(token));
    REQUIRE(res);
    CHECK(res->status == 204);
    events = store::read_log(log).events;
    REQUIRE(events.size() == 4);
    CHECK(json(events.back()).at("kind") == "reservation_cancelled");
}
