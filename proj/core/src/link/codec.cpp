#include "parking/json.hpp"
#include "parking/link/frame.hpp"

namespace parking::link {

namespace {

struct Invalid {
    std::string reason;
};

const json& member(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw Invalid{std::string("missing \"") + key + "\""};
    return *it;
}

std::uint64_t as_u64(const json& obj, const char* key) {
    const json& v = member(obj, key);
    if (!v.is_number_unsigned()) throw Invalid{std::string("\"") + key + "\" must be unsigned"};
    return v.get<std::uint64_t>();
}

std::string as_string(const json& obj, const char* key) {
    const json& v = member(obj, key);
    if (!v.is_string()) throw Invalid{std::string("\"") + key + "\" must be a string"};
    return v.get<std::string>();
}

SpaceId as_space(const json& obj) {
    auto s = as_string(obj, "space_id");
    if (s.empty()) throw Invalid{"empty space_id"};
    return SpaceId{std::move(s)};
}

SlotNo as_slot(const json& obj, const char* key) {
    const auto v = as_u64(obj, key);
    if (v < 1 || v > 0xFFFFFFFFu) throw Invalid{std::string("\"") + key + "\" out of range"};
    return static_cast<SlotNo>(v);
}

template <typename E>
E as_enum(const json& obj, const char* key, std::optional<E> (*parse)(std::string_view)) {
    auto v = parse(as_string(obj, key));
    if (!v) throw Invalid{std::string("bad value for \"") + key + "\""};
    return *v;
}

json body_to_json(const FrameBody& body) {
    return std::visit(
        [](const auto& b) -> json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Hello>) {
                return json{{"space_id", b.space_id}, {"token", b.token}};
            } else if constexpr (std::is_same_v<T, AuthReq>) {
                return json{{"space_id", b.space_id},
                            {"lane", to_string(b.lane)},
                            {"rfid_uid", b.rfid_uid}};
            } else if constexpr (std::is_same_v<T, AuthResp>) {
                json j{{"request_frame_id", b.request_frame_id}, {"decision", b.decision}};
                if (b.slot_no) j["slot_no"] = *b.slot_no;
                if (b.fee) j["fee"] = b.fee->minor;
                return j;
            } else if constexpr (std::is_same_v<T, StatusUpdate>) {
                return json{{"space_id", b.space_id},
                            {"slot_no", b.slot_no},
                            {"new_state", to_string(b.new_state)},
                            {"cause", to_string(b.cause)},
                            {"update_seq", b.update_seq}};
            } else if constexpr (std::is_same_v<T, Ack>) {
                return json{{"frame_id", b.frame_id}};
            } else if constexpr (std::is_same_v<T, Heartbeat>) {
                return json{{"space_id", b.space_id}};
            } else {
                return json{{"code", b.code}, {"text", b.text}};
            }
        },
        body);
}

FrameBody body_from_json(std::string_view kind, const json& b) {
    if (!b.is_object()) throw Invalid{"body must be an object"};
    if (kind == "hello") return Hello{as_space(b), as_string(b, "token")};
    if (kind == "auth_req") {
        auto uid = RfidUid::parse(as_string(b, "rfid_uid"));
        if (!uid) throw Invalid{"malformed rfid_uid"};
        return AuthReq{as_space(b), as_enum<Lane>(b, "lane", parse_lane), *uid};
    }
    if (kind == "auth_resp") {
        AuthResp r;
        r.request_frame_id = as_u64(b, "request_frame_id");
        const json& d = member(b, "decision");
        if (!d.is_object()) throw Invalid{"decision must be an object"};
        const auto outcome = as_string(d, "outcome");
        auto text = as_string(d, "display_text");
        if (text.empty()) throw Invalid{"display_text must be non-empty"};
        if (outcome == "accepted") {
            r.decision = Accepted{as_enum<GateAction>(d, "action", parse_gate_action), text};
        } else if (outcome == "rejected") {
            r.decision = Rejected{as_enum<RejectReason>(d, "reason", parse_reject_reason), text};
        } else {
            throw Invalid{"bad decision outcome"};
        }
        if (b.contains("slot_no")) r.slot_no = as_slot(b, "slot_no");
        if (b.contains("fee")) {
            const json& f = b.at("fee");
            if (!f.is_number_integer()) throw Invalid{"\"fee\" must be an integer"};
            r.fee = Money{f.get<std::int64_t>()};
        }
        return r;
    }
    if (kind == "status_update") {
        return StatusUpdate{as_space(b), as_slot(b, "slot_no"),
                            as_enum<SlotKind>(b, "new_state", parse_slot_kind),
                            as_enum<ChangeCause>(b, "cause", parse_change_cause),
                            as_u64(b, "update_seq")};
    }
    if (kind == "ack") return Ack{as_u64(b, "frame_id")};
    if (kind == "heartbeat") return Heartbeat{as_space(b)};
    // "error"
    const json& code = member(b, "code");
    if (!code.is_number_integer()) throw Invalid{"\"code\" must be an integer"};
    const auto c = code.get<std::int64_t>();
    if (c < 0 || c > 999) throw Invalid{"\"code\" out of range"};
    return ErrorBody{static_cast<int>(c), as_string(b, "text")};
}

constexpr std::string_view kKinds[] = {"hello",     "auth_req", "auth_resp", "status_update",
                                       "ack",       "heartbeat", "error"};

bool known_kind(std::string_view k) {
    for (auto name : kKinds) {
        if (name == k) return true;
    }
    return false;
}

} // namespace

std::string_view to_string(Lane lane) { return lane == Lane::Entry ? "entry" : "exit"; }

std::optional<Lane> parse_lane(std::string_view text) {
    if (text == "entry") return Lane::Entry;
    if (text == "exit") return Lane::Exit;
    return std::nullopt;
}

std::string_view to_string(DecodeErrorKind k) {
    switch (k) {
    case DecodeErrorKind::Truncated: return "truncated";
    case DecodeErrorKind::BadJson: return "bad_json";
    case DecodeErrorKind::UnknownKind: return "unknown_kind";
    case DecodeErrorKind::InvariantViolation: return "invariant_violation";
    }
    return "?";
}

std::string_view DeviceFrame::kind() const { return kKinds[body.index()]; }

std::string encode_frame(const DeviceFrame& frame) {
    const json j{{"frame_id", frame.frame_id},
                 {"sent_at", format_iso8601(frame.sent_at)},
                 {"kind", frame.kind()},
                 {"body", body_to_json(frame.body)}};
    auto out = j.dump(-1, ' ', false, json::error_handler_t::replace);
    out.push_back('\n');
    return out;
}

DecodeResult decode_frame(std::string_view bytes) {
    if (!bytes.empty() && bytes.back() == '\n') bytes.remove_suffix(1);
    if (!bytes.empty() && bytes.back() == '\r') bytes.remove_suffix(1);
    if (bytes.find_first_not_of(" \t\r") == std::string_view::npos) {
        return DecodeError{DecodeErrorKind::Truncated, 0, "empty frame"};
    }
    if (bytes.size() > kMaxFrameBytes) {
        return DecodeError{DecodeErrorKind::BadJson, kMaxFrameBytes, "frame too long"};
    }
    if (const auto nl = bytes.find('\n'); nl != std::string_view::npos) {
        return DecodeError{DecodeErrorKind::BadJson, nl, "more than one line"};
    }

    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        // Running off the end of the input means the frame was cut short.
        const bool cut_short = e.byte > bytes.size();
        const std::size_t pos = cut_short ? bytes.size() : (e.byte == 0 ? 0 : e.byte - 1);
        const auto kind = cut_short ? DecodeErrorKind::Truncated : DecodeErrorKind::BadJson;
        return DecodeError{kind, pos, "JSON parse error"};
    } catch (const std::exception&) {
        return DecodeError{DecodeErrorKind::BadJson, 0, "JSON parse error"};
    }

    try {
        if (!doc.is_object()) throw Invalid{"frame must be a JSON object"};
        const auto kind = as_string(doc, "kind");
        if (!known_kind(kind)) {
            return DecodeError{DecodeErrorKind::UnknownKind, 0, "unknown kind"};
        }
        DeviceFrame f;
        f.frame_id = as_u64(doc, "frame_id");
        if (f.frame_id == 0) throw Invalid{"frame_id must be positive"};
        auto sent = parse_iso8601(as_string(doc, "sent_at"));
        if (!sent) throw Invalid{"bad sent_at timestamp"};
        f.sent_at = *sent;
        f.body = body_from_json(kind, member(doc, "body"));
        return f;
    } catch (const Invalid& e) {
        return DecodeError{DecodeErrorKind::InvariantViolation, 0, e.reason};
    } catch (const std::exception& e) {
        return DecodeError{DecodeErrorKind::InvariantViolation, 0, e.what()};
    }
}

} // namespace parking::link
