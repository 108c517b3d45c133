#include "parking/sim/simulator.hpp"

#include "parking/link/edge_buffer.hpp"

#include <array>
#include <functional>
#include <queue>
#include <tuple>

namespace parking::sim {

std::string SimulationTrace::to_jsonl() const {
    std::string out;
    for (const auto& e : events) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

namespace {

using link::Lane;

constexpr std::size_t kMaxEvents = 5'000'000;

struct Tap {
    Lane lane = Lane::Entry;
    RfidUid uid = RfidUid::from("00000000");
    Duration retry{0};
    int max_attempts = 1;
    int attempt = 1;
};

struct LaneState {
    GateState gate = GateState::Closed;
    std::string lcd{display::kWelcome};
    std::uint64_t lcd_gen = 0;
    std::optional<std::uint64_t> outstanding; // frame_id of the AuthReq in flight
    std::optional<Tap> tap;
    std::optional<link::AuthResp> granted;
};

struct Node {
    explicit Node(std::size_t buffer_capacity) : buffer(buffer_capacity) {}

    std::string key;
    SpaceId space_id;
    std::string token;
    std::array<LaneState, 2> lanes;
    bool connected = false;
    std::uint64_t epoch = 0;
    std::unique_ptr<LinkStream> stream;
    std::uint64_t next_frame_id = 1;
    std::uint64_t next_update_seq = 1;
    link::EdgeBuffer buffer;
    Duration latency{0};
    int drop_up = 0;
    int drop_down = 0;
    std::int64_t partitioned_until = -1;
    bool flush_pending = false;
    std::vector<SlotKind> seen;
};

struct MotoristRef {
    std::string id;
    std::string token;
};

json frame_json(const link::DeviceFrame& f) {
    json j = json::parse(link::encode_frame(f));
    if (std::holds_alternative<link::Hello>(f.body)) j["body"].erase("token");
    return j;
}

class Sim {
public:
    Sim(const ScenarioScript& script, CloudPort& cloud) : script_(script), cloud_(cloud) {}

    SimulationTrace run() {
        validate(script_);
        setup();
        for (auto& [key, node] : nodes_) connect(node);
        for (const auto& a : script_.actions) at(a.at_ms, [this, &a] { dispatch(a); });
        end_ = script_.actions.empty() ? 0 : script_.actions.back().at_ms;
        if (!script_.actions.empty()) {
            for (auto& [key, node] : nodes_) {
                Node* n = &node;
                at(script_.config.heartbeat_interval.count(), [this, n] { heartbeat(*n); });
            }
        }

        std::size_t processed = 0;
        while (!queue_.empty()) {
            Item item = queue_.top();
            queue_.pop();
            now_ = item.t;
            item.fn();
            if (++processed > kMaxEvents) throw ScriptError("simulation did not settle");
        }
        finish();
        return std::move(trace_);
    }

private:
    struct Item {
        std::int64_t t;
        std::uint64_t order;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return std::tie(a.t, a.order) > std::tie(b.t, b.order);
        }
    };

    Timestamp vnow() const { return script_.start + Duration{now_}; }

    void at(std::int64_t t, std::function<void()> fn) { queue_.push(Item{t, order_++, std::move(fn)}); }

    json& emit(const std::string& node, const char* event) {
        trace_.events.push_back(json{{"t", now_}, {"node", node}, {"event", event}});
        return trace_.events.back();
    }

    void check(bool pass, json details) {
        details["t"] = now_;
        details["node"] = "script";
        details["event"] = "assert";
        details["pass"] = pass;
        ++trace_.assertions;
        if (!pass) {
            ++trace_.failures;
            if (!trace_.first_failure) trace_.first_failure = details;
        }
        trace_.events.push_back(std::move(details));
    }

    LaneState& lane(Node& n, Lane l) { return n.lanes[static_cast<std::size_t>(l)]; }

    // --- setup ---------------------------------------------------------------

    void setup() {
        cloud_.set_time(vnow());
        for (const auto& sp : script_.spaces) {
            Registered reg;
            try {
                reg = cloud_.register_space(sp.spec);
            } catch (const std::exception& e) {
                throw ScriptError("setup: space \"" + sp.key + "\" rejected: " + e.what());
            }
            auto [it, _] = nodes_.try_emplace(sp.key, script_.config.buffer_capacity);
            Node& n = it->second;
            n.key = sp.key;
            n.space_id = SpaceId{reg.id};
            n.token = reg.token;
            for (const auto& r : cloud_.slots(n.space_id, std::nullopt)) n.seen.push_back(r.state);
            auto& e = emit("api", "api");
            e["op"] = "register_space";
            e["key"] = sp.key;
            e["id"] = reg.id;
        }
        for (const auto& m : script_.motorists) {
            Registered reg;
            try {
                reg = cloud_.register_motorist(m.profile);
            } catch (const std::exception& e) {
                throw ScriptError("setup: motorist \"" + m.key + "\" rejected: " + e.what());
            }
            motorists_[m.key] = MotoristRef{reg.id, reg.token};
            auto& e = emit("api", "api");
            e["op"] = "register_motorist";
            e["key"] = m.key;
            e["id"] = reg.id;
        }
    }

    // --- link ----------------------------------------------------------------

    std::uint64_t send(Node& n, link::FrameBody body, std::size_t replies) {
        const link::DeviceFrame f{n.next_frame_id++, vnow(), std::move(body)};
        emit(n.key, "frame_sent")["frame"] = frame_json(f);
        if (!n.connected || !n.stream) {
            lost(n, f.frame_id, "up", "disconnected");
            return f.frame_id;
        }
        if (n.drop_up > 0) {
            --n.drop_up;
            lost(n, f.frame_id, "up", "dropped");
            return f.frame_id;
        }
        cloud_.set_time(vnow());
        std::vector<std::string> lines;
        try {
            lines = n.stream->exchange(link::encode_frame(f), replies);
        } catch (const std::exception& e) {
            lost(n, f.frame_id, "up", e.what());
            drop_connection(n);
            reconnect_later(n);
            return f.frame_id;
        }
        const auto epoch = n.epoch;
        for (auto& line : lines) {
            at(now_ + n.latency.count(), [this, &n, epoch, line] { deliver(n, epoch, line); });
        }
        if (std::holds_alternative<link::AuthReq>(f.body)) observe_cloud(n);
        return f.frame_id;
    }

    void lost(Node& n, std::uint64_t frame_id, const char* direction, const std::string& why) {
        auto& e = emit(n.key, "frame_lost");
        e["frame_id"] = frame_id;
        e["direction"] = direction;
        e["reason"] = why;
    }

    void drop_connection(Node& n) {
        n.connected = false;
        ++n.epoch;
        n.stream.reset();
    }

    void reconnect_later(Node& n) {
        at(now_ + script_.config.heartbeat_interval.count(), [this, &n] {
            if (!n.connected && now_ >= n.partitioned_until) connect(n);
        });
    }

    void connect(Node& n) {
        try {
            n.stream = cloud_.connect();
        } catch (const std::exception& e) {
            emit(n.key, "fault")["type"] = "connect_failed";
            reconnect_later(n);
            return;
        }
        n.connected = true;
        ++n.epoch;
        n.next_frame_id = 1;
        emit(n.key, "connect");
        send(n, link::Hello{n.space_id, n.token}, 1);
        n.buffer.connection_lost();
        flush(n);
    }

    void deliver(Node& n, std::uint64_t epoch, const std::string& line) {
        if (epoch != n.epoch) {
            auto& e = emit(n.key, "frame_lost");
            e["direction"] = "down";
            e["reason"] = "connection reset";
            return;
        }
        if (n.drop_down > 0) {
            --n.drop_down;
            auto& e = emit(n.key, "frame_lost");
            e["direction"] = "down";
            e["reason"] = "dropped";
            return;
        }
        auto decoded = link::decode_frame(line);
        if (const auto* err = std::get_if<link::DecodeError>(&decoded)) {
            emit(n.key, "frame_received")["decode_error"] = err->reason;
            return;
        }
        const auto& f = std::get<link::DeviceFrame>(decoded);
        emit(n.key, "frame_received")["frame"] = frame_json(f);

        if (const auto* ack = std::get_if<link::Ack>(&f.body)) {
            if (n.buffer.ack(ack->frame_id)) emit(n.key, "buffer")["size"] = n.buffer.size();
        } else if (const auto* resp = std::get_if<link::AuthResp>(&f.body)) {
            for (Lane l : {Lane::Entry, Lane::Exit}) {
                if (lane(n, l).outstanding == resp->request_frame_id) {
                    resolve(n, l, *resp);
                    return;
                }
            }
            emit(n.key, "late_response")["request_frame_id"] = resp->request_frame_id;
        } else if (const auto* error = std::get_if<link::ErrorBody>(&f.body)) {
            if (error->code == 401) {
                // Usually a lost hello; start over with a fresh handshake.
                emit(n.key, "fault")["type"] = "rejected_by_cloud";
                drop_connection(n);
                reconnect_later(n);
            }
            std::optional<Lane> oldest;
            for (Lane l : {Lane::Entry, Lane::Exit}) {
                const auto& o = lane(n, l).outstanding;
                if (o && (!oldest || *o < *lane(n, *oldest).outstanding)) oldest = l;
            }
            if (oldest) unavailable(n, *oldest, "cloud error " + std::to_string(error->code));
        }
    }

    void heartbeat(Node& n) {
        if (n.connected) send(n, link::Heartbeat{n.space_id}, 0);
        const auto next = now_ + script_.config.heartbeat_interval.count();
        if (next <= end_) at(next, [this, &n] { heartbeat(n); });
    }

    void flush(Node& n) {
        if (!n.connected) return;
        n.buffer.flush(link::ConnectionState::Connected, vnow(), script_.config.retransmit_after,
                       [this, &n](const link::StatusUpdate& u) { return send(n, u, 1); });
        if (!n.buffer.empty() && !n.flush_pending) {
            n.flush_pending = true;
            at(now_ + script_.config.retransmit_after.count(), [this, &n] {
                n.flush_pending = false;
                flush(n);
            });
        }
    }

    // --- lanes ---------------------------------------------------------------

    void tap(Node& n, Tap t) {
        LaneState& L = lane(n, t.lane);
        const bool busy = L.outstanding || L.gate != GateState::Closed;
        auto& e = emit(n.key, "card_tap");
        e["lane"] = link::to_string(t.lane);
        e["uid"] = t.uid.str();
        e["attempt"] = t.attempt;
        if (busy) {
            e["ignored"] = "busy";
            retry(n, t);
            return;
        }
        L.tap = t;
        if (!n.connected) {
            unavailable(n, t.lane, "offline");
            return;
        }
        const auto id = send(n, link::AuthReq{n.space_id, t.lane, t.uid}, 1);
        L.outstanding = id;
        const Lane l = t.lane;
        at(now_ + script_.config.auth_timeout.count(), [this, &n, l, id] {
            if (lane(n, l).outstanding == id) unavailable(n, l, "timeout");
        });
    }

    void retry(Node& n, Tap t) {
        if (t.attempt >= t.max_attempts || t.retry.count() <= 0) return;
        ++t.attempt;
        at(now_ + t.retry.count(), [this, &n, t] { tap(n, t); });
    }

    void unavailable(Node& n, Lane l, const std::string& why) {
        LaneState& L = lane(n, l);
        L.outstanding.reset();
        auto& e = emit(n.key, "decision");
        e["lane"] = link::to_string(l);
        e["decision"] = json{{"outcome", "unavailable"},
                             {"reason", why},
                             {"display_text", display::kTryAgain}};
        set_lcd(n, l, std::string(display::kTryAgain), true);
        if (L.tap) retry(n, *L.tap);
    }

    void resolve(Node& n, Lane l, const link::AuthResp& resp) {
        LaneState& L = lane(n, l);
        L.outstanding.reset();
        auto& e = emit(n.key, "decision");
        e["lane"] = link::to_string(l);
        e["decision"] = resp.decision;
        if (resp.slot_no) e["slot_no"] = *resp.slot_no;
        if (resp.fee) e["fee"] = resp.fee->minor;
        if (is_accepted(resp.decision)) {
            set_lcd(n, l, display_text(resp.decision), false);
            L.granted = resp;
            move_gate(n, l, GateEvent::DecisionAccepted);
        } else {
            set_lcd(n, l, display_text(resp.decision), true);
            L.gate = step_gate(L.gate, GateEvent::DecisionRejected);
        }
    }

    void set_lcd(Node& n, Lane l, const std::string& text, bool hold) {
        LaneState& L = lane(n, l);
        L.lcd = text;
        const auto gen = ++L.lcd_gen;
        auto& e = emit(n.key, "lcd");
        e["lane"] = link::to_string(l);
        e["text"] = text;
        if (!hold) return;
        at(now_ + script_.config.lcd_hold.count(), [this, &n, l, gen] {
            if (lane(n, l).lcd_gen == gen) set_lcd(n, l, std::string(display::kWelcome), false);
        });
    }

    void move_gate(Node& n, Lane l, GateEvent ev) {
        LaneState& L = lane(n, l);
        const GateState from = L.gate;
        try {
            L.gate = step_gate(from, ev);
        } catch (const IllegalGateEvent& err) {
            emit(n.key, "gate_error")["error"] = err.what();
            return;
        }
        auto& e = emit(n.key, "gate");
        e["lane"] = link::to_string(l);
        e["from"] = to_string(from);
        e["to"] = to_string(L.gate);

        if (L.gate == GateState::Open) on_open(n, l);
        if (L.gate == GateState::Closed) {
            L.granted.reset();
            set_lcd(n, l, std::string(display::kWelcome), false);
            return;
        }
        at(now_ + dwell(L.gate, script_.config.gate).count(),
           [this, &n, l] { move_gate(n, l, GateEvent::TimerElapsed); });
    }

    void on_open(Node& n, Lane l) {
        const LaneState& L = lane(n, l);
        if (!L.granted || !L.granted->slot_no) return;
        link::StatusUpdate u;
        u.space_id = n.space_id;
        u.slot_no = *L.granted->slot_no;
        u.new_state = l == Lane::Entry ? SlotKind::Occupied : SlotKind::Vacant;
        u.cause = l == Lane::Entry ? ChangeCause::CheckedIn : ChangeCause::CheckedOut;
        u.update_seq = n.next_update_seq++;
        try {
            n.buffer.push(u);
        } catch (const link::BufferOverflow& err) {
            auto& e = emit(n.key, "buffer_overflow");
            e["update_seq"] = u.update_seq;
            e["size"] = n.buffer.size();
            return;
        }
        auto& e = emit(n.key, "buffer");
        e["size"] = n.buffer.size();
        e["pushed_update_seq"] = u.update_seq;
        flush(n);
    }

    // --- cloud view ------------------------------------------------------------

    void observe_cloud(Node& n) {
        cloud_.set_time(vnow());
        const auto readings = cloud_.slots(n.space_id, std::nullopt);
        n.seen.resize(readings.size(), SlotKind::Vacant);
        for (std::size_t i = 0; i < readings.size(); ++i) {
            if (readings[i].state == n.seen[i]) continue;
            n.seen[i] = readings[i].state;
            auto& e = emit(n.key, "cloud_state");
            e["slot_no"] = i + 1;
            e["state"] = to_string(readings[i].state);
            e["color"] = slot_color(readings[i].state);
        }
    }

    // --- actions ---------------------------------------------------------------

    void dispatch(const Action& a) {
        std::visit([this](const auto& b) { act(b); }, a.body);
    }

    void act(const CardTap& b) {
        tap(nodes_.at(b.space), Tap{b.lane, b.uid, b.retry, b.max_attempts, 1});
    }

    void act(const Partition& b) {
        Node& n = nodes_.at(b.space);
        const auto until = now_ + b.duration.count();
        auto& e = emit(n.key, "fault");
        e["type"] = "partition";
        e["duration_ms"] = b.duration.count();
        n.partitioned_until = std::max(n.partitioned_until, until);
        if (n.connected) drop_connection(n);
        at(until, [this, &n] {
            if (n.connected || now_ < n.partitioned_until) return;
            emit(n.key, "fault")["type"] = "heal";
            connect(n);
        });
    }

    void act(const Delay& b) {
        Node& n = nodes_.at(b.space);
        n.latency = b.latency;
        auto& e = emit(n.key, "fault");
        e["type"] = "delay";
        e["latency_ms"] = b.latency.count();
    }

    void act(const DropNext& b) {
        Node& n = nodes_.at(b.space);
        (b.direction == Direction::Up ? n.drop_up : n.drop_down) += b.n;
        auto& e = emit(n.key, "fault");
        e["type"] = "drop_next";
        e["n"] = b.n;
        e["direction"] = b.direction == Direction::Up ? "up" : "down";
    }

    void act(const AdvanceTime& b) {
        emit("script", "advance")["duration_ms"] = b.duration.count();
        at(now_ + b.duration.count(), [] {});
        end_ = std::max(end_, now_ + b.duration.count());
    }

    void act(const Reserve& b) {
        const MotoristRef& m = motorists_.at(b.motorist);
        Node& n = nodes_.at(b.space);
        cloud_.set_time(vnow());
        const auto r = cloud_.reserve(m.token, n.space_id, b.slot);
        const auto* id = std::get_if<ReservationId>(&r);
        {
            auto& e = emit("api", "api");
            e["op"] = "reserve";
            e["motorist"] = b.motorist;
            e["space"] = b.space;
            e["slot_no"] = b.slot;
            if (id) {
                e["reservation_id"] = id->value;
            } else {
                e["error"] = std::get<std::string>(r);
            }
        }
        if (id) reservations_[b.motorist] = {*id, b.space};
        observe_cloud(n);

        json details{{"check", "reserve"}, {"motorist", b.motorist}, {"space", b.space},
                     {"slot_no", b.slot}};
        const std::string actual = id ? std::string("ok") : std::get<std::string>(r);
        const std::string expected = b.expect_error.value_or("ok");
        details["actual"] = actual;
        details["expected"] = expected;
        check(actual == expected, std::move(details));
    }

    void act(const Cancel& b) {
        const MotoristRef& m = motorists_.at(b.motorist);
        auto it = reservations_.find(b.motorist);
        if (it == reservations_.end()) {
            check(false, json{{"check", "cancel"}, {"motorist", b.motorist},
                              {"actual", "no scripted reservation"}, {"expected", "ok"}});
            return;
        }
        cloud_.set_time(vnow());
        const auto err = cloud_.cancel(m.token, it->second.first);
        {
            auto& e = emit("api", "api");
            e["op"] = "cancel";
            e["motorist"] = b.motorist;
            e["reservation_id"] = it->second.first.value;
            if (err) e["error"] = *err;
        }
        observe_cloud(nodes_.at(it->second.second));
        check(!err, json{{"check", "cancel"}, {"motorist", b.motorist},
                         {"actual", err.value_or("ok")}, {"expected", "ok"}});
    }

    void act(const ExpectSlot& b) {
        Node& n = nodes_.at(b.space);
        cloud_.set_time(vnow());
        std::optional<std::string> token;
        if (b.holder) token = motorists_.at(*b.holder).token;
        const auto readings = cloud_.slots(n.space_id, token);
        json details{{"check", "slot"}, {"space", b.space}, {"slot_no", b.slot},
                     {"expected", to_string(b.state)}};
        if (b.holder) details["holder"] = *b.holder;
        if (b.slot < 1 || b.slot > readings.size()) {
            details["actual"] = "no such slot";
            check(false, std::move(details));
            return;
        }
        const SlotReading& r = readings[b.slot - 1];
        details["actual"] = to_string(r.state);
        bool pass = r.state == b.state;
        if (b.holder) {
            details["held_by_holder"] = r.mine;
            pass = pass && r.mine;
        }
        check(pass, std::move(details));
    }

    void act(const ExpectGate& b) {
        const LaneState& L = lane(nodes_.at(b.space), b.lane);
        check(L.gate == b.state, json{{"check", "gate"}, {"space", b.space},
                                      {"lane", link::to_string(b.lane)},
                                      {"expected", to_string(b.state)},
                                      {"actual", to_string(L.gate)}});
    }

    void act(const ExpectLcd& b) {
        const LaneState& L = lane(nodes_.at(b.space), b.lane);
        check(L.lcd == b.text, json{{"check", "lcd"}, {"space", b.space},
                                    {"lane", link::to_string(b.lane)},
                                    {"expected", b.text}, {"actual", L.lcd}});
    }

    void act(const ExpectBuffer& b) {
        const Node& n = nodes_.at(b.space);
        check(n.buffer.size() == b.size, json{{"check", "buffer"}, {"space", b.space},
                                              {"expected", b.size}, {"actual", n.buffer.size()}});
    }

    // --- wrap up ---------------------------------------------------------------

    void finish() {
        cloud_.set_time(vnow());
        for (auto& [key, n] : nodes_) {
            std::vector<FinalSlot> slots;
            for (const auto& r : cloud_.slots(n.space_id, std::nullopt)) slots.push_back({r.state, {}});
            for (const auto& [mkey, m] : motorists_) {
                const auto mine = cloud_.slots(n.space_id, m.token);
                for (std::size_t i = 0; i < mine.size() && i < slots.size(); ++i) {
                    if (mine[i].mine) slots[i].holder = mkey;
                }
            }
            trace_.final_slots[key] = std::move(slots);
            trace_.final_telemetry[key] = cloud_.telemetry(n.space_id);
            trace_.final_buffer[key] = n.buffer.size();
        }
    }

    const ScenarioScript& script_;
    CloudPort& cloud_;
    SimulationTrace trace_;
    std::priority_queue<Item, std::vector<Item>, Later> queue_;
    std::uint64_t order_ = 0;
    std::int64_t now_ = 0;
    std::int64_t end_ = 0;
    std::map<std::string, Node> nodes_;
    std::map<std::string, MotoristRef> motorists_;
    std::map<std::string, std::pair<ReservationId, std::string>> reservations_;
};

} // namespace

SimulationTrace run_scenario(const ScenarioScript& script, CloudPort& cloud) {
    return Sim(script, cloud).run();
}

SimulationTrace run_scenario(const ScenarioScript& script) {
    InProcessCloud cloud(script.config.engine, script.seed, script.config.heartbeat_interval);
    return run_scenario(script, cloud);
}

} // namespace parking::sim
