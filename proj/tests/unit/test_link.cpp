#include "../support/frames.hpp"
#include "../support/world.hpp"

#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"
#include "parking/link/edge_buffer.hpp"
#include "parking/link/frame.hpp"
#include "parking/link/session.hpp"
#include "parking/link/tcp.hpp"

#include <doctest.h>

using namespace parking;
using namespace parking::link;
using namespace std::chrono_literals;

namespace {

const Timestamp t0 = from_millis(support::World::kStart);

DecodeErrorKind error_kind(std::string_view bytes) {
    auto r = decode_frame(bytes);
    REQUIRE(std::holds_alternative<DecodeError>(r));
    return std::get<DecodeError>(r).kind;
}

DeviceFrame decoded(std::string_view bytes) {
    auto r = decode_frame(bytes);
    if (auto* e = std::get_if<DecodeError>(&r)) FAIL(e->reason);
    return std::get<DeviceFrame>(r);
}

StatusUpdate update(std::uint64_t seq, ChangeCause cause = ChangeCause::CheckedIn) {
    return StatusUpdate{SpaceId{"sp-1"}, 1, SlotKind::Occupied, cause, seq};
}

} // namespace

TEST_CASE("heartbeat encodes as one line") {
    const DeviceFrame f{7, t0, Heartbeat{SpaceId{"sp-1"}}};
    const auto line = encode_frame(f);
    CHECK(line ==
          R"({"body":{"space_id":"sp-1"},"frame_id":7,"kind":"heartbeat","sent_at":"2024-05-01T08:00:00.000Z"})"
          "\n");
    CHECK(std::count(line.begin(), line.end(), '\n') == 1);
}

TEST_CASE("auth_req carries the canonical uid") {
    const DeviceFrame f{1, t0, AuthReq{SpaceId{"sp-1"}, Lane::Entry, RfidUid::from("9c:7a:31:b4")}};
    const auto line = encode_frame(f);
    CHECK(line.find(R"("rfid_uid":"9C7A31B4")") != std::string::npos);
    CHECK(line.find(R"("lane":"entry")") != std::string::npos);
    CHECK(decoded(line) == f);
}

TEST_CASE("codec round trip on random frames") {
    support::Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        const auto f = support::random_frame(rng);
        const auto line = encode_frame(f);
        CAPTURE(line);
        REQUIRE(decoded(line) == f);
    }
}

TEST_CASE("decode errors") {
    CHECK(error_kind("") == DecodeErrorKind::Truncated);
    CHECK(error_kind("\n") == DecodeErrorKind::Truncated);
    CHECK(error_kind(R"({"frame_id":1,"kind":"ack")") == DecodeErrorKind::Truncated);
    CHECK(error_kind("{]") == DecodeErrorKind::BadJson);
    CHECK(error_kind("hello") == DecodeErrorKind::BadJson);
    CHECK(error_kind(R"({"frame_id":1,"sent_at":"2024-05-01T08:00:00Z","kind":"gossip","body":{}})") ==
          DecodeErrorKind::UnknownKind);
    CHECK(error_kind(R"({"frame_id":0,"sent_at":"2024-05-01T08:00:00Z","kind":"ack","body":{"frame_id":1}})") ==
          DecodeErrorKind::InvariantViolation);
    CHECK(error_kind(R"({"frame_id":1,"sent_at":"yesterday","kind":"ack","body":{"frame_id":1}})") ==
          DecodeErrorKind::InvariantViolation);
    CHECK(error_kind(R"({"frame_id":1,"sent_at":"2024-05-01T08:00:00Z","kind":"auth_req","body":{"space_id":"s","lane":"entry","rfid_uid":"XYZ"}})") ==
          DecodeErrorKind::InvariantViolation);
    CHECK(error_kind(R"({"frame_id":1,"sent_at":"2024-05-01T08:00:00Z","kind":"status_update","body":{"space_id":"s","slot_no":0,"new_state":"vacant","cause":"checked_out","update_seq":1}})") ==
          DecodeErrorKind::InvariantViolation);
    CHECK(error_kind("[1,2]") == DecodeErrorKind::InvariantViolation);
    CHECK(error_kind(std::string(kMaxFrameBytes + 1, ' ') + "x") == DecodeErrorKind::BadJson);

    CHECK(error_kind(R"({"kind":"ack","body":{"frame_id":1)") == DecodeErrorKind::Truncated);
    CHECK(error_kind(R"({"kind":"ack)") == DecodeErrorKind::Truncated);

    auto r = decode_frame(R"({"frame_id": 1, ]})");
    CHECK(std::get<DecodeError>(r).position == 16); // the ']'
    r = decode_frame(R"({"frame_id":1)");
    CHECK(std::get<DecodeError>(r).position == 13);
}

TEST_CASE("unknown top-level keys are ignored") {
    const auto f = decoded(
        R"({"frame_id":3,"sent_at":"2024-05-01T08:00:00Z","kind":"ack","body":{"frame_id":2},"trace":"x"})");
    CHECK(f == DeviceFrame{3, from_millis(1714550400000), Ack{2}});
}

TEST_CASE("fuzzed bytes never crash the decoder") {
    support::Rng rng(23);
    const std::string seed_line = encode_frame(support::random_frame(rng));
    for (int i = 0; i < 5000; ++i) {
        std::string bytes;
        if (i % 2 == 0) {
            const auto n = support::pick(rng, 0, 200);
            for (std::size_t k = 0; k < n; ++k) bytes.push_back(static_cast<char>(support::pick(rng, 0, 255)));
        } else {
            bytes = seed_line;
            for (int k = 0; k < 3; ++k) {
                bytes[support::pick(rng, 0, bytes.size() - 1)] = static_cast<char>(support::pick(rng, 0, 255));
            }
        }
        auto r = decode_frame(bytes);
        if (auto* f = std::get_if<DeviceFrame>(&r)) CHECK(decoded(encode_frame(*f)) == *f);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("edge buffer passes through while connected") {
    EdgeBuffer buf;
    std::vector<std::uint64_t> sent;
    std::uint64_t next = 1;
    auto tx = [&](const StatusUpdate& u) {
        sent.push_back(u.update_seq);
        return next++;
    };
    buf.push(update(1));
    auto rep = buf.flush(ConnectionState::Connected, t0, 3s, tx);
    CHECK(rep.transmitted == 1);
    CHECK(buf.ack(1));
    CHECK(buf.empty());
    CHECK_FALSE(buf.ack(1));
}

TEST_CASE("edge buffer holds updates while disconnected and delivers them in order") {
    EdgeBuffer buf;
    std::vector<std::uint64_t> sent;
    std::uint64_t next = 10;
    auto tx = [&](const StatusUpdate& u) {
        sent.push_back(u.update_seq);
        return next++;
    };
    for (std::uint64_t s = 1; s <= 3; ++s) buf.push(update(s));
    auto rep = buf.flush(ConnectionState::Disconnected, t0, 3s, tx);
    CHECK(rep.transmitted == 0);
    CHECK(rep.pending == 3);
    CHECK(sent.empty());

    rep = buf.flush(ConnectionState::Connected, t0 + 1s, 3s, tx);
    CHECK(rep.transmitted == 3);
    CHECK(sent == std::vector<std::uint64_t>{1, 2, 3});
    // Not yet due for retransmission.
    CHECK(buf.flush(ConnectionState::Connected, t0 + 2s, 3s, tx).transmitted == 0);
    CHECK(buf.ack(10));
    CHECK(buf.ack(11));
    CHECK(buf.ack(12));
    CHECK(buf.empty());
}

TEST_CASE("edge buffer retransmits unacknowledged frames") {
    EdgeBuffer buf;
    std::uint64_t next = 1;
    std::vector<std::uint64_t> sent;
    auto tx = [&](const StatusUpdate& u) {
        sent.push_back(u.update_seq);
        return next++;
    };
    buf.push(update(1));
    buf.push(update(2));
    buf.flush(ConnectionState::Connected, t0, 3s, tx);
    buf.ack(2);
    CHECK(buf.flush(ConnectionState::Connected, t0 + 3s, 3s, tx).transmitted == 1);
    CHECK(sent == std::vector<std::uint64_t>{1, 2, 1});
    CHECK_FALSE(buf.ack(1)); // superseded frame id
    CHECK(buf.ack(3));

    buf.push(update(3));
    buf.flush(ConnectionState::Connected, t0 + 4s, 3s, tx);
    buf.connection_lost();
    CHECK(buf.flush(ConnectionState::Connected, t0 + 4s, 3s, tx).transmitted == 1);
}

TEST_CASE("edge buffer overflow is loud") {
    EdgeBuffer buf(2);
    buf.push(update(1));
    buf.push(update(2));
    CHECK_THROWS_AS(buf.push(update(3)), BufferOverflow);
    CHECK(buf.size() == 2);
    CHECK(EdgeBuffer().capacity() == 1024);
}

TEST_CASE("liveness boundary") {
    CHECK(liveness(t0, t0, 5s) == Liveness::Online);
    CHECK(liveness(t0, t0 + 15s, 5s) == Liveness::Online);
    CHECK(liveness(t0, t0 + 15s + 1ms, 5s) == Liveness::Offline);
    CHECK(liveness(t0, t0 + 20s, 5s) == Liveness::Offline);

    DeviceHub hub(5s);
    CHECK(hub.liveness(SpaceId{"sp-1"}, t0) == Liveness::Offline);
    hub.heartbeat(SpaceId{"sp-1"}, t0);
    CHECK(hub.liveness(SpaceId{"sp-1"}, t0 + 1s) == Liveness::Online);
    hub.heartbeat(SpaceId{"sp-1"}, t0 - 10s); // stale heartbeat does not rewind
    CHECK(hub.last_heartbeat(SpaceId{"sp-1"}) == t0);
}

TEST_CASE("status updates apply once per update_seq") {
    DeviceHub once;
    once.apply_status_update(update(1));
    once.apply_status_update(update(2, ChangeCause::CheckedOut));

    DeviceHub twice;
    CHECK(twice.apply_status_update(update(1)));
    CHECK_FALSE(twice.apply_status_update(update(1)));
    CHECK(twice.apply_status_update(update(2, ChangeCause::CheckedOut)));
    CHECK_FALSE(twice.apply_status_update(update(2, ChangeCause::CheckedOut)));
    CHECK_FALSE(twice.apply_status_update(update(1)));

    CHECK(twice.telemetry(SpaceId{"sp-1"}) == once.telemetry(SpaceId{"sp-1"}));
    CHECK(once.telemetry(SpaceId{"sp-1"}) == EdgeTelemetry{1, 1, 2});
}

// ---------------------------------------------------------------------------

namespace {

struct Cloud {
    ManualClock clock{t0};
    api::ParkingService service{store::Store::in_memory(), clock, 1};
    DeviceHub hub;
    ParkingSpace lot = service.register_space(support::lot_spec("Lot", 2));
    Motorist amina = [this] {
        auto p = support::driver_profile(1);
        p.rfid_uid = "9C7A31B4";
        return service.register_motorist(p);
    }();
};

DeviceFrame hello(const Cloud& c, std::uint64_t id = 1) {
    return DeviceFrame{id, t0, Hello{c.lot.space_id, c.lot.device_token}};
}

DeviceFrame auth(const Cloud& c, std::uint64_t id, Lane lane, const char* uid = "9C7A31B4") {
    return DeviceFrame{id, t0, AuthReq{c.lot.space_id, lane, RfidUid::from(uid)}};
}

const AuthResp& resp_of(const std::vector<DeviceFrame>& out) {
    REQUIRE(out.size() == 1);
    REQUIRE(std::holds_alternative<AuthResp>(out[0].body));
    return std::get<AuthResp>(out[0].body);
}

int error_code(const std::vector<DeviceFrame>& out) {
    REQUIRE(out.size() == 1);
    REQUIRE(std::holds_alternative<ErrorBody>(out[0].body));
    return std::get<ErrorBody>(out[0].body).code;
}

} // namespace

TEST_CASE("session requires hello first") {
    Cloud c;
    LinkSession s(c.service, c.hub);
    CHECK(error_code(s.handle(auth(c, 1, Lane::Entry))) == 401);
    CHECK(s.closed());

    LinkSession bad(c.service, c.hub);
    CHECK(error_code(bad.handle(DeviceFrame{1, t0, Hello{c.lot.space_id, "wrong"}})) == 401);
    CHECK(bad.closed());

    LinkSession garbage(c.service, c.hub);
    const auto out = garbage.on_bytes("not json\n");
    CHECK(out.find("\"code\":401") != std::string::npos);
    CHECK(garbage.closed());
}

TEST_CASE("session authenticates entry and exit") {
    Cloud c;
    LinkSession s(c.service, c.hub);
    auto ack = s.handle(hello(c));
    REQUIRE(ack.size() == 1);
    CHECK(std::get<Ack>(ack[0].body).frame_id == 1);
    CHECK(c.hub.liveness(c.lot.space_id, t0) == Liveness::Online);

    SUBCASE("unknown card") {
        const auto& r = resp_of(s.handle(auth(c, 2, Lane::Entry, "DEADBEEF")));
        CHECK(r.request_frame_id == 2);
        CHECK(std::get<Rejected>(r.decision).reason == RejectReason::UnknownCard);
        CHECK(display_text(r.decision) == "ACCESS DENIED");
    }
    SUBCASE("reserved card") {
        c.service.reserve(c.amina.motorist_id, c.lot.space_id, 1);
        const auto in = resp_of(s.handle(auth(c, 2, Lane::Entry)));
        CHECK(std::get<Accepted>(in.decision).action == GateAction::OpenEntry);
        CHECK(in.slot_no == SlotNo{1});
        // State change is in place before the response exists.
        CHECK(c.service.space(c.lot.space_id)->slots[0].index() == 2);

        c.clock.advance(90min);
        const auto out = resp_of(s.handle(auth(c, 3, Lane::Exit)));
        CHECK(std::get<Accepted>(out.decision).action == GateAction::OpenExit);
        CHECK(out.fee == Money{2000}); // 90 min, 15 free, hourly units of 1000
        CHECK_FALSE(c.service.active_claim(c.amina.rfid_uid, c.lot.space_id));
    }
}

TEST_CASE("lost response is re-issued, not re-decided") {
    Cloud c;
    c.service.reserve(c.amina.motorist_id, c.lot.space_id, 1);
    LinkSession s(c.service, c.hub);
    s.handle(hello(c));
    const auto first = resp_of(s.handle(auth(c, 2, Lane::Entry)));
    // The edge never saw the answer and asks again.
    const auto again = resp_of(s.handle(auth(c, 3, Lane::Entry)));
    CHECK(again.request_frame_id == 3);
    CHECK(again.decision == first.decision);
    CHECK(again.slot_no == first.slot_no);

    // Once the gate pass is confirmed the next tap is a fresh decision.
    s.handle(DeviceFrame{4, t0, StatusUpdate{c.lot.space_id, 1, SlotKind::Occupied,
                                              ChangeCause::CheckedIn, 1}});
    const auto later = resp_of(s.handle(auth(c, 5, Lane::Entry)));
    CHECK(std::get<Rejected>(later.decision).reason == RejectReason::AlreadyInside);
}

TEST_CASE("session frame rules") {
    Cloud c;
    LinkSession s(c.service, c.hub);
    s.handle(hello(c, 5));
    CHECK(error_code(s.handle(DeviceFrame{5, t0, Heartbeat{c.lot.space_id}})) == 400);
    CHECK(error_code(s.handle(DeviceFrame{6, t0, AuthReq{SpaceId{"other"}, Lane::Entry,
                                                          RfidUid::from("9C7A31B4")}})) == 403);
    CHECK(s.handle(DeviceFrame{7, t0, Heartbeat{c.lot.space_id}}).empty());
    const auto out = s.on_bytes("{bad json}\n");
    CHECK(out.find("\"code\":400") != std::string::npos);
    CHECK_FALSE(s.closed());

    auto upd = s.handle(DeviceFrame{9, t0, StatusUpdate{c.lot.space_id, 1, SlotKind::Occupied,
                                                        ChangeCause::CheckedIn, 1}});
    CHECK(std::get<Ack>(upd.at(0).body).frame_id == 9);
    CHECK(c.hub.telemetry(c.lot.space_id).updates_applied == 1);
    // Duplicate delivery is acknowledged but applied once.
    s.handle(DeviceFrame{10, t0, StatusUpdate{c.lot.space_id, 1, SlotKind::Occupied,
                                              ChangeCause::CheckedIn, 1}});
    CHECK(c.hub.telemetry(c.lot.space_id).updates_applied == 1);
}

TEST_CASE("session reassembles split lines and numbers its frames") {
    Cloud c;
    LinkSession s(c.service, c.hub);
    const auto bytes = encode_frame(hello(c)) + encode_frame(auth(c, 2, Lane::Entry, "DEADBEEF"));
    std::string out;
    for (char ch : bytes) out += s.on_bytes(std::string_view(&ch, 1));
    std::vector<DeviceFrame> frames;
    std::size_t start = 0;
    for (auto nl = out.find('\n'); nl != std::string::npos; nl = out.find('\n', start)) {
        frames.push_back(decoded(out.substr(start, nl - start)));
        start = nl + 1;
    }
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].frame_id == 1);
    CHECK(frames[1].frame_id == 2);
    CHECK(std::holds_alternative<AuthResp>(frames[1].body));
}

TEST_CASE("oversized line closes the session") {
    Cloud c;
    LinkSession s(c.service, c.hub);
    s.handle(hello(c));
    const auto out = s.on_bytes(std::string(kMaxFrameBytes + 10, 'x'));
    CHECK(out.find("\"code\":400") != std::string::npos);
    CHECK(s.closed());
}

TEST_CASE("device link over tcp") {
    Cloud c;
    LinkServer server(c.service, c.hub);
    const auto port = server.listen("127.0.0.1", 0);
    server.start();
    {
        TcpLineClient client("127.0.0.1", port);
        client.send(encode_frame(hello(c)));
        auto line = client.read_line(2s);
        REQUIRE(line);
        CHECK(std::holds_alternative<Ack>(decoded(*line).body));
        client.send(encode_frame(auth(c, 2, Lane::Entry)));
        line = client.read_line(2s);
        REQUIRE(line);
        const auto f = decoded(*line);
        CHECK(std::get<Rejected>(std::get<AuthResp>(f.body).decision).reason ==
              RejectReason::NoReservation);
    }
    {
        TcpLineClient intruder("127.0.0.1", port);
        intruder.send(encode_frame(auth(c, 1, Lane::Entry)));
        auto line = intruder.read_line(2s);
        REQUIRE(line);
        CHECK(std::get<ErrorBody>(decoded(*line).body).code == 401);
        // The server hangs up after the error.
        CHECK_FALSE(intruder.read_line(2s));
    }
    server.stop();
    CHECK(split_host_port("127.0.0.1:7070") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 7070});
}
