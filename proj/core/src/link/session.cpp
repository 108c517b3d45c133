#include "parking/link/session.hpp"

namespace parking::link {

DeviceFrame LinkSession::make(FrameBody body) {
    return DeviceFrame{next_out_++, service_.now(), std::move(body)};
}

DeviceFrame LinkSession::error(int code, std::string text) {
    return make(ErrorBody{code, std::move(text)});
}

std::string LinkSession::on_bytes(std::string_view data) {
    std::string out;
    if (closed_) return out;
    pending_.append(data);
    std::size_t start = 0;
    while (!closed_) {
        const auto nl = pending_.find('\n', start);
        if (nl == std::string::npos) break;
        const std::string_view line(pending_.data() + start, nl - start);
        start = nl + 1;
        for (const auto& f : handle_line(line)) out += encode_frame(f);
    }
    pending_.erase(0, start);
    if (!closed_ && pending_.size() > kMaxFrameBytes) {
        out += encode_frame(error(400, "frame too long"));
        closed_ = true;
    }
    return out;
}

std::vector<DeviceFrame> LinkSession::handle_line(std::string_view line) {
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) return {};
    auto decoded = decode_frame(line);
    if (auto* err = std::get_if<DecodeError>(&decoded)) {
        if (!space_) {
            closed_ = true;
            return {error(401, "hello required")};
        }
        return {error(400, std::string(to_string(err->kind)) + ": " + err->reason)};
    }
    return handle(std::get<DeviceFrame>(decoded));
}

std::vector<DeviceFrame> LinkSession::handle(const DeviceFrame& frame) {
    if (closed_) return {};
    if (frame.frame_id <= last_in_) {
        return {error(400, "frame_id " + std::to_string(frame.frame_id) + " not increasing")};
    }
    last_in_ = frame.frame_id;

    if (const auto* hello = std::get_if<Hello>(&frame.body)) {
        if (space_ && *space_ == hello->space_id) return {make(Ack{frame.frame_id})};
        if (space_ || !service_.authenticate_device(hello->space_id, hello->token)) {
            closed_ = true;
            return {error(401, "bad device credentials")};
        }
        space_ = hello->space_id;
        hub_.heartbeat(*space_, service_.now());
        return {make(Ack{frame.frame_id})};
    }
    if (!space_) {
        closed_ = true;
        return {error(401, "hello required")};
    }

    if (const auto* req = std::get_if<AuthReq>(&frame.body)) {
        if (req->space_id != *space_) return {error(403, "space mismatch")};
        try {
            return {make(authenticate(frame.frame_id, *req))};
        } catch (const std::exception& e) {
            return {error(500, std::string("internal error: ") + e.what())};
        }
    }
    if (const auto* update = std::get_if<StatusUpdate>(&frame.body)) {
        if (update->space_id != *space_) return {error(403, "space mismatch")};
        hub_.apply_status_update(*update);
        return {make(Ack{frame.frame_id})};
    }
    if (const auto* hb = std::get_if<Heartbeat>(&frame.body)) {
        if (hb->space_id != *space_) return {error(403, "space mismatch")};
        hub_.heartbeat(*space_, service_.now());
        return {};
    }
    // Acks, responses and errors from the edge need no reply.
    return {};
}

AuthResp LinkSession::authenticate(std::uint64_t request_frame_id, const AuthReq& req) {
    if (auto pass = hub_.pending_pass(req.space_id, req.lane, req.rfid_uid)) {
        bool still_valid = false;
        auto claim = service_.active_claim(req.rfid_uid, req.space_id);
        if (req.lane == Lane::Entry) {
            const auto* s = claim ? std::get_if<ParkingSession>(&*claim) : nullptr;
            still_valid = s && s->session_id == pass->session_id;
        } else {
            auto s = service_.session(pass->session_id);
            still_valid = !claim && s && !s->open();
        }
        if (still_valid) {
            AuthResp resp = pass->response;
            resp.request_frame_id = request_frame_id;
            return resp;
        }
    }

    const GateOutcome outcome = req.lane == Lane::Entry
                                    ? service_.check_in(req.space_id, req.rfid_uid)
                                    : service_.check_out(req.space_id, req.rfid_uid);
    AuthResp resp;
    resp.request_frame_id = request_frame_id;
    resp.decision = outcome.decision;
    if (outcome.session) {
        resp.slot_no = outcome.session->slot_no;
        if (req.lane == Lane::Exit) resp.fee = outcome.session->fee;
        hub_.remember_pass(req.space_id, req.lane,
                           PendingPass{req.rfid_uid, outcome.session->slot_no,
                                       outcome.session->session_id, resp});
    }
    return resp;
}

} // namespace parking::link
