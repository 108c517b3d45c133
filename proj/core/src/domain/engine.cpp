#include "parking/domain/engine.hpp"

#include "parking/domain/errors.hpp"
#include "parking/domain/fee.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <tuple>

namespace parking {

namespace {

constexpr std::int64_t kMaxCapacity = 10000;

template <typename T>
std::string next_id(std::string_view prefix, const T& existing) {
    return std::string(prefix) + std::to_string(existing.size() + 1);
}

std::uint64_t id_number(const std::string& id) {
    const auto dash = id.rfind('-');
    if (dash == std::string::npos) return 0;
    return std::strtoull(id.c_str() + dash + 1, nullptr, 10);
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

void validate_tariff(const Tariff& t) {
    if (t.billing_unit.count() <= 0 || t.free_minutes.count() < 0 || t.rate_per_unit.minor < 0) {
        throw DomainError(ErrorCode::InvalidTariff, "billing unit must be positive, rate and "
                                                    "free minutes non-negative");
    }
}

[[noreturn]] void invalid_event(const EventRecord& r, const std::string& why) {
    throw DomainError(ErrorCode::InvalidEvent,
                      "seq " + std::to_string(r.seq) + " (" + std::string(r.kind()) + "): " + why);
}

Accepted accept(GateAction action) { return Accepted{action, std::string(display::kGranted)}; }
Rejected reject(RejectReason reason) { return Rejected{reason, std::string(display::kDenied)}; }

} // namespace

std::string_view EventRecord::kind() const {
    static constexpr std::string_view kNames[] = {
        "space_registered",      "motorist_registered", "card_bound", "slot_reserved",
        "reservation_cancelled", "reservation_expired", "checked_in", "checked_out",
    };
    return kNames[payload.index()];
}

Availability count_slots(const ParkingSpace& space) {
    Availability a;
    for (const auto& s : space.slots) {
        switch (kind_of(s)) {
        case SlotKind::Vacant: ++a.vacant; break;
        case SlotKind::Reserved: ++a.reserved; break;
        case SlotKind::Occupied: ++a.occupied; break;
        }
    }
    return a;
}

Engine::Engine(EngineConfig config) : config_(config) {}

Engine Engine::restore(EngineState state, EngineConfig config) {
    Engine e(config);
    e.state_ = std::move(state);
    e.rebuild_indexes();
    return e;
}

void Engine::clear_hooks() {
    journal_ = nullptr;
    observers_.clear();
}

void Engine::rebuild_indexes() {
    by_uid_.clear();
    by_national_id_.clear();
    by_token_.clear();
    claims_.clear();
    latest_reservation_.clear();
    for (const auto& [id, m] : state_.motorists) {
        by_uid_[m.rfid_uid] = id;
        by_national_id_[m.national_id] = id;
        if (!m.access_token.empty()) by_token_[m.access_token] = id;
    }
    for (const auto& [id, r] : state_.reservations) {
        if (r.status == ReservationStatus::Active) claims_[r.motorist_id] = id;
        auto key = std::make_pair(r.motorist_id, r.space_id);
        auto it = latest_reservation_.find(key);
        if (it == latest_reservation_.end() || id_number(it->second.value) < id_number(id.value)) {
            latest_reservation_[key] = id;
        }
    }
    for (const auto& [id, s] : state_.sessions) {
        if (s.open()) claims_[s.motorist_id] = id;
    }
}

// ---------------------------------------------------------------------------
// Lookups

ParkingSpace& Engine::space_ref(const SpaceId& id) {
    auto it = state_.spaces.find(id);
    if (it == state_.spaces.end()) throw DomainError(ErrorCode::UnknownSpace, id.value);
    return it->second;
}

const ParkingSpace& Engine::space_ref(const SpaceId& id) const {
    auto it = state_.spaces.find(id);
    if (it == state_.spaces.end()) throw DomainError(ErrorCode::UnknownSpace, id.value);
    return it->second;
}

SlotState& Engine::slot_ref(ParkingSpace& space, SlotNo slot) {
    if (slot < 1 || slot > space.capacity()) {
        throw DomainError(ErrorCode::UnknownSlot,
                          space.space_id.value + " slot " + std::to_string(slot));
    }
    return space.slots[slot - 1];
}

const ParkingSpace* Engine::find_space(const SpaceId& id) const {
    auto it = state_.spaces.find(id);
    return it == state_.spaces.end() ? nullptr : &it->second;
}

const Motorist* Engine::find_motorist(const MotoristId& id) const {
    auto it = state_.motorists.find(id);
    return it == state_.motorists.end() ? nullptr : &it->second;
}

const Reservation* Engine::find_reservation(const ReservationId& id) const {
    auto it = state_.reservations.find(id);
    return it == state_.reservations.end() ? nullptr : &it->second;
}

const ParkingSession* Engine::find_session(const SessionId& id) const {
    auto it = state_.sessions.find(id);
    return it == state_.sessions.end() ? nullptr : &it->second;
}

std::optional<Motorist> Engine::find_motorist_by_uid(const RfidUid& uid) const {
    auto it = by_uid_.find(uid);
    if (it == by_uid_.end()) return std::nullopt;
    return state_.motorists.at(it->second);
}

std::optional<Motorist> Engine::find_motorist_by_token(std::string_view token) const {
    if (token.empty()) return std::nullopt;
    auto it = by_token_.find(std::string(token));
    if (it == by_token_.end()) return std::nullopt;
    return state_.motorists.at(it->second);
}

std::optional<Claim> Engine::active_claim(const MotoristId& motorist) const {
    auto it = claims_.find(motorist);
    if (it == claims_.end()) return std::nullopt;
    if (const auto* rid = std::get_if<ReservationId>(&it->second)) {
        return Claim{state_.reservations.at(*rid)};
    }
    return Claim{state_.sessions.at(std::get<SessionId>(it->second))};
}

std::optional<Claim> Engine::active_claim(const RfidUid& uid, const SpaceId& space) const {
    auto m = by_uid_.find(uid);
    if (m == by_uid_.end()) return std::nullopt;
    auto claim = active_claim(m->second);
    if (!claim) return std::nullopt;
    const SpaceId& at = std::visit([](const auto& c) -> const SpaceId& { return c.space_id; },
                                   *claim);
    if (at != space) return std::nullopt;
    return claim;
}

Availability Engine::availability(const SpaceId& space) const {
    return count_slots(space_ref(space));
}

std::vector<SpaceSummary> Engine::list_spaces() const {
    std::vector<SpaceSummary> out;
    out.reserve(state_.spaces.size());
    for (const auto& [id, s] : state_.spaces) {
        out.push_back(SpaceSummary{id, s.name, s.location, s.admin, s.tariff, s.currency,
                                   s.capacity(), count_slots(s)});
    }
    std::sort(out.begin(), out.end(), [](const SpaceSummary& a, const SpaceSummary& b) {
        return id_number(a.space_id.value) < id_number(b.space_id.value);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Commands

void Engine::emit(EventPayload payload, Timestamp now) {
    EventRecord record{state_.last_seq + 1, now, std::move(payload)};
    if (journal_) journal_(record);
    apply(record);
}

ParkingSpace Engine::register_space(const SpaceSpec& spec, Timestamp now) {
    if (spec.capacity < 1 || spec.capacity > kMaxCapacity) {
        throw DomainError(ErrorCode::InvalidCapacity, std::to_string(spec.capacity));
    }
    const auto& loc = spec.location;
    if (!std::isfinite(loc.latitude) || !std::isfinite(loc.longitude) || loc.latitude < -90.0 ||
        loc.latitude > 90.0 || loc.longitude < -180.0 || loc.longitude > 180.0) {
        throw DomainError(ErrorCode::InvalidCoordinates,
                          std::to_string(loc.latitude) + "," + std::to_string(loc.longitude));
    }
    validate_tariff(spec.tariff);

    ParkingSpace space;
    space.space_id = SpaceId{next_id("sp-", state_.spaces)};
    space.name = spec.name;
    space.location = spec.location;
    space.admin = spec.admin;
    space.tariff = spec.tariff;
    space.currency = spec.currency;
    space.device_token = spec.device_token;
    space.slots.assign(static_cast<std::size_t>(spec.capacity), Vacant{});

    const SpaceId id = space.space_id;
    emit(SpaceRegistered{std::move(space)}, now);
    return state_.spaces.at(id);
}

Motorist Engine::register_motorist(const MotoristProfile& profile, Timestamp now) {
    auto uid = RfidUid::parse(profile.rfid_uid);
    if (!uid) throw DomainError(ErrorCode::MalformedUid, profile.rfid_uid);
    if (blank(profile.national_id)) {
        throw DomainError(ErrorCode::InvalidProfile, "national or passport id is required");
    }
    if (by_uid_.contains(*uid)) throw DomainError(ErrorCode::DuplicateCredential, uid->str());
    if (by_national_id_.contains(profile.national_id)) {
        throw DomainError(ErrorCode::DuplicateNationalId, profile.national_id);
    }

    Motorist m;
    m.motorist_id = MotoristId{next_id("mo-", state_.motorists)};
    m.full_name = profile.full_name;
    m.nationality = profile.nationality;
    m.national_id = profile.national_id;
    m.contact = profile.contact;
    m.rfid_uid = *uid;
    m.access_token = profile.access_token;

    const MotoristId id = m.motorist_id;
    emit(MotoristRegistered{std::move(m)}, now);
    return state_.motorists.at(id);
}

Motorist Engine::bind_card(const MotoristId& motorist, std::string_view rfid_uid, Timestamp now) {
    const Motorist* m = find_motorist(motorist);
    if (!m) throw DomainError(ErrorCode::UnknownMotorist, motorist.value);
    auto uid = RfidUid::parse(rfid_uid);
    if (!uid) throw DomainError(ErrorCode::MalformedUid, std::string(rfid_uid));
    if (m->rfid_uid == *uid) return *m;
    if (by_uid_.contains(*uid)) throw DomainError(ErrorCode::DuplicateCredential, uid->str());
    if (claims_.contains(motorist)) {
        throw DomainError(ErrorCode::MotoristHasActiveClaim, motorist.value);
    }
    emit(CardBound{motorist, *uid}, now);
    return state_.motorists.at(motorist);
}

Reservation Engine::reserve_slot(const SpaceId& space_id, SlotNo slot, const MotoristId& motorist,
                                 Timestamp now) {
    ParkingSpace& space = space_ref(space_id);
    const SlotState& state = slot_ref(space, slot);
    const Motorist* m = find_motorist(motorist);
    if (!m) throw DomainError(ErrorCode::UnknownMotorist, motorist.value);
    if (!std::holds_alternative<Vacant>(state)) {
        throw DomainError(ErrorCode::SlotNotVacant, space_id.value + " slot " +
                                                        std::to_string(slot));
    }
    if (claims_.contains(motorist)) {
        throw DomainError(ErrorCode::MotoristHasActiveClaim, motorist.value);
    }

    Reservation r;
    r.reservation_id = ReservationId{next_id("rs-", state_.reservations)};
    r.space_id = space_id;
    r.slot_no = slot;
    r.motorist_id = motorist;
    r.rfid_uid = m->rfid_uid;
    r.reserved_at = now;
    r.expires_at = now + config_.reservation_ttl;
    r.status = ReservationStatus::Active;

    const ReservationId id = r.reservation_id;
    emit(SlotReserved{std::move(r)}, now);
    return state_.reservations.at(id);
}

void Engine::cancel_reservation(const ReservationId& reservation, Timestamp now) {
    const Reservation* r = find_reservation(reservation);
    if (!r) throw DomainError(ErrorCode::UnknownReservation, reservation.value);
    if (r->status != ReservationStatus::Active) {
        throw DomainError(ErrorCode::NotActive, reservation.value + " is " +
                                                    std::string(to_string(r->status)));
    }
    emit(ReservationCancelled{reservation}, now);
}

std::vector<ReservationId> Engine::expire_reservations(Timestamp now) {
    std::vector<const Reservation*> due;
    for (const auto& [id, r] : state_.reservations) {
        if (r.status == ReservationStatus::Active && r.expires_at <= now) due.push_back(&r);
    }
    std::sort(due.begin(), due.end(), [](const Reservation* a, const Reservation* b) {
        return std::make_tuple(a->expires_at, id_number(a->reservation_id.value)) <
               std::make_tuple(b->expires_at, id_number(b->reservation_id.value));
    });
    std::vector<ReservationId> ids;
    ids.reserve(due.size());
    for (const auto* r : due) ids.push_back(r->reservation_id);
    for (const auto& id : ids) emit(ReservationExpired{id}, now);
    return ids;
}

GateOutcome Engine::check_in(const SpaceId& space_id, const RfidUid& uid, Timestamp now) {
    const ParkingSpace& space = space_ref(space_id);
    auto m = by_uid_.find(uid);
    if (m == by_uid_.end()) return {reject(RejectReason::UnknownCard), std::nullopt};
    const MotoristId& motorist = m->second;

    if (auto c = claims_.find(motorist); c != claims_.end()) {
        if (std::holds_alternative<SessionId>(c->second)) {
            return {reject(RejectReason::AlreadyInside), std::nullopt};
        }
        const Reservation& r = state_.reservations.at(std::get<ReservationId>(c->second));
        if (r.space_id != space_id) return {reject(RejectReason::NoReservation), std::nullopt};
        if (r.expires_at <= now) return {reject(RejectReason::ReservationExpired), std::nullopt};

        ParkingSession s;
        s.session_id = SessionId{next_id("ps-", state_.sessions)};
        s.reservation_id = r.reservation_id;
        s.space_id = space_id;
        s.slot_no = r.slot_no;
        s.motorist_id = motorist;
        s.rfid_uid = uid;
        s.entry_at = now;
        const SessionId id = s.session_id;
        emit(CheckedIn{std::move(s)}, now);
        return {accept(GateAction::OpenEntry), state_.sessions.at(id)};
    }

    if (config_.allow_walk_in) {
        for (std::size_t i = 0; i < space.slots.size(); ++i) {
            if (!std::holds_alternative<Vacant>(space.slots[i])) continue;
            ParkingSession s;
            s.session_id = SessionId{next_id("ps-", state_.sessions)};
            s.space_id = space_id;
            s.slot_no = static_cast<SlotNo>(i + 1);
            s.motorist_id = motorist;
            s.rfid_uid = uid;
            s.entry_at = now;
            const SessionId id = s.session_id;
            emit(CheckedIn{std::move(s)}, now);
            return {accept(GateAction::OpenEntry), state_.sessions.at(id)};
        }
        return {reject(RejectReason::NoVacancy), std::nullopt};
    }

    if (auto l = latest_reservation_.find({motorist, space_id}); l != latest_reservation_.end()) {
        if (state_.reservations.at(l->second).status == ReservationStatus::Expired) {
            return {reject(RejectReason::ReservationExpired), std::nullopt};
        }
    }
    return {reject(RejectReason::NoReservation), std::nullopt};
}

GateOutcome Engine::check_out(const SpaceId& space_id, const RfidUid& uid, Timestamp now) {
    const ParkingSpace& space = space_ref(space_id);
    auto m = by_uid_.find(uid);
    if (m == by_uid_.end()) return {reject(RejectReason::UnknownCard), std::nullopt};

    auto c = claims_.find(m->second);
    if (c == claims_.end() || !std::holds_alternative<SessionId>(c->second)) {
        return {reject(RejectReason::NotInside), std::nullopt};
    }
    const SessionId id = std::get<SessionId>(c->second);
    const ParkingSession& s = state_.sessions.at(id);
    if (s.space_id != space_id) return {reject(RejectReason::NotInside), std::nullopt};

    const Money fee = compute_fee(s, space.tariff, now);
    emit(CheckedOut{id, now, fee}, now);
    return {accept(GateAction::OpenExit), state_.sessions.at(id)};
}

// ---------------------------------------------------------------------------
// Application

void Engine::apply(const EventRecord& record) {
    if (record.seq != state_.last_seq + 1) {
        invalid_event(record, "expected seq " + std::to_string(state_.last_seq + 1));
    }
    auto change = apply_payload(record);
    state_.last_seq = record.seq;
    for (const auto& observer : observers_) observer(record, change);
}

std::optional<StateChange> Engine::apply_payload(const EventRecord& record) {
    const auto& p = record.payload;

    if (const auto* e = std::get_if<SpaceRegistered>(&p)) {
        const auto& s = e->space;
        if (s.space_id.empty() || state_.spaces.contains(s.space_id)) {
            invalid_event(record, "duplicate or empty space id");
        }
        if (s.slots.empty() ||
            !std::all_of(s.slots.begin(), s.slots.end(),
                         [](const SlotState& st) { return std::holds_alternative<Vacant>(st); })) {
            invalid_event(record, "new space must have vacant slots");
        }
        state_.spaces.emplace(s.space_id, s);
        return std::nullopt;
    }

    if (const auto* e = std::get_if<MotoristRegistered>(&p)) {
        const auto& m = e->motorist;
        if (m.motorist_id.empty() || state_.motorists.contains(m.motorist_id) ||
            by_uid_.contains(m.rfid_uid) || by_national_id_.contains(m.national_id)) {
            invalid_event(record, "duplicate motorist identity");
        }
        state_.motorists.emplace(m.motorist_id, m);
        by_uid_[m.rfid_uid] = m.motorist_id;
        by_national_id_[m.national_id] = m.motorist_id;
        if (!m.access_token.empty()) by_token_[m.access_token] = m.motorist_id;
        return std::nullopt;
    }

    if (const auto* e = std::get_if<CardBound>(&p)) {
        auto it = state_.motorists.find(e->motorist_id);
        if (it == state_.motorists.end()) invalid_event(record, "unknown motorist");
        if (by_uid_.contains(e->rfid_uid)) invalid_event(record, "credential already bound");
        if (claims_.contains(e->motorist_id)) invalid_event(record, "motorist holds a claim");
        by_uid_.erase(it->second.rfid_uid);
        it->second.rfid_uid = e->rfid_uid;
        by_uid_[e->rfid_uid] = e->motorist_id;
        return std::nullopt;
    }

    if (const auto* e = std::get_if<SlotReserved>(&p)) {
        const auto& r = e->reservation;
        auto sp = state_.spaces.find(r.space_id);
        if (sp == state_.spaces.end() || r.slot_no < 1 || r.slot_no > sp->second.capacity()) {
            invalid_event(record, "unknown slot");
        }
        if (!state_.motorists.contains(r.motorist_id) || claims_.contains(r.motorist_id)) {
            invalid_event(record, "motorist unknown or already holds a claim");
        }
        if (r.reservation_id.empty() || state_.reservations.contains(r.reservation_id) ||
            r.status != ReservationStatus::Active) {
            invalid_event(record, "bad reservation record");
        }
        SlotState& slot = sp->second.slots[r.slot_no - 1];
        if (!std::holds_alternative<Vacant>(slot)) invalid_event(record, "slot not vacant");
        SlotState old = slot;
        slot = Reserved{r.reservation_id, r.reserved_at, r.expires_at};
        state_.reservations.emplace(r.reservation_id, r);
        claims_[r.motorist_id] = r.reservation_id;
        latest_reservation_[{r.motorist_id, r.space_id}] = r.reservation_id;
        return StateChange{r.space_id, r.slot_no, old, slot, ChangeCause::Reserved, record.at,
                           r.motorist_id};
    }

    const auto release = [&](const ReservationId& id, ReservationStatus to,
                             ChangeCause cause) -> StateChange {
        auto it = state_.reservations.find(id);
        if (it == state_.reservations.end() || it->second.status != ReservationStatus::Active) {
            invalid_event(record, "reservation not active");
        }
        Reservation& r = it->second;
        SlotState& slot = state_.spaces.at(r.space_id).slots[r.slot_no - 1];
        SlotState old = slot;
        r.status = to;
        slot = Vacant{};
        claims_.erase(r.motorist_id);
        return StateChange{r.space_id, r.slot_no, old, slot, cause, record.at, std::nullopt};
    };

    if (const auto* e = std::get_if<ReservationCancelled>(&p)) {
        return release(e->reservation_id, ReservationStatus::Cancelled, ChangeCause::Cancelled);
    }
    if (const auto* e = std::get_if<ReservationExpired>(&p)) {
        return release(e->reservation_id, ReservationStatus::Expired, ChangeCause::Expired);
    }

    if (const auto* e = std::get_if<CheckedIn>(&p)) {
        const auto& s = e->session;
        auto sp = state_.spaces.find(s.space_id);
        if (sp == state_.spaces.end() || s.slot_no < 1 || s.slot_no > sp->second.capacity()) {
            invalid_event(record, "unknown slot");
        }
        if (s.session_id.empty() || state_.sessions.contains(s.session_id) || !s.open()) {
            invalid_event(record, "bad session record");
        }
        SlotState& slot = sp->second.slots[s.slot_no - 1];
        SlotState old = slot;
        if (s.reservation_id) {
            auto it = state_.reservations.find(*s.reservation_id);
            const auto* held = std::get_if<Reserved>(&slot);
            if (it == state_.reservations.end() ||
                it->second.status != ReservationStatus::Active || !held ||
                held->reservation_id != *s.reservation_id ||
                it->second.motorist_id != s.motorist_id) {
                invalid_event(record, "reservation does not hold this slot");
            }
            it->second.status = ReservationStatus::Converted;
            claims_.erase(s.motorist_id);
        } else if (!std::holds_alternative<Vacant>(slot) || claims_.contains(s.motorist_id)) {
            invalid_event(record, "walk-in needs a vacant slot and a free credential");
        }
        slot = Occupied{s.session_id, s.entry_at};
        state_.sessions.emplace(s.session_id, s);
        claims_[s.motorist_id] = s.session_id;
        return StateChange{s.space_id, s.slot_no, old, slot, ChangeCause::CheckedIn, record.at,
                           s.motorist_id};
    }

    if (const auto* e = std::get_if<CheckedOut>(&p)) {
        auto it = state_.sessions.find(e->session_id);
        if (it == state_.sessions.end() || !it->second.open()) {
            invalid_event(record, "session not open");
        }
        ParkingSession& s = it->second;
        if (e->exit_at < s.entry_at) invalid_event(record, "exit before entry");
        SlotState& slot = state_.spaces.at(s.space_id).slots[s.slot_no - 1];
        SlotState old = slot;
        s.exit_at = e->exit_at;
        s.fee = e->fee;
        slot = Vacant{};
        claims_.erase(s.motorist_id);
        return StateChange{s.space_id, s.slot_no, old, slot, ChangeCause::CheckedOut, record.at,
                           std::nullopt};
    }

    invalid_event(record, "unhandled kind");
}

} // namespace parking
