#include "parking/api/service.hpp"

#include "parking/domain/errors.hpp"

#include <cstdio>

namespace parking::api {

ParkingService::ParkingService(std::unique_ptr<store::Store> store, const Clock& clock,
                               std::uint64_t token_seed)
    : clock_(clock), store_(std::move(store)), config_(store_->engine().config()),
      rng_(token_seed) {
    // Rebuild the stream history from what was on disk, so `since` resumption
    // works across restarts.
    const auto recovered = store_->take_recovered_events();
    if (!recovered.empty()) {
        Engine scratch(config_);
        scratch.add_observer([this](const EventRecord&, const std::optional<StateChange>& c) {
            if (c) hub_.publish(*c);
        });
        for (const auto& e : recovered) scratch.apply(e);
    }
    store_->engine().add_observer([this](const EventRecord&, const std::optional<StateChange>& c) {
        if (c) hub_.publish(*c);
    });
}

ParkingService::~ParkingService() { hub_.shutdown(); }

std::string ParkingService::fresh_token() {
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                  static_cast<unsigned long long>(rng_()));
    return buf;
}

void ParkingService::sweep(Timestamp now) { store_->engine().expire_reservations(now); }

ParkingSpace ParkingService::register_space(SpaceSpec spec) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    if (spec.device_token.empty()) spec.device_token = fresh_token();
    return store_->engine().register_space(spec, now);
}

Motorist ParkingService::register_motorist(MotoristProfile profile) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    if (profile.access_token.empty()) profile.access_token = fresh_token();
    return store_->engine().register_motorist(profile, now);
}

Motorist ParkingService::bind_card(const MotoristId& motorist, std::string_view rfid_uid) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    return store_->engine().bind_card(motorist, rfid_uid, now);
}

Reservation ParkingService::reserve(const MotoristId& motorist, const SpaceId& space,
                                    SlotNo slot) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    return store_->engine().reserve_slot(space, slot, motorist, now);
}

void ParkingService::cancel(const MotoristId& caller, const ReservationId& reservation) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    auto& engine = store_->engine();
    const Reservation* r = engine.find_reservation(reservation);
    if (!r) throw DomainError(ErrorCode::UnknownReservation, reservation.value);
    if (r->motorist_id != caller) throw DomainError(ErrorCode::NotOwner, reservation.value);
    engine.cancel_reservation(reservation, now);
}

std::vector<ReservationId> ParkingService::expire_due() {
    std::unique_lock lock(mu_);
    return store_->engine().expire_reservations(clock_.now());
}

GateOutcome ParkingService::check_in(const SpaceId& space, const RfidUid& uid) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    return store_->engine().check_in(space, uid, now);
}

GateOutcome ParkingService::check_out(const SpaceId& space, const RfidUid& uid) {
    std::unique_lock lock(mu_);
    const auto now = clock_.now();
    sweep(now);
    return store_->engine().check_out(space, uid, now);
}

std::optional<MotoristId> ParkingService::authenticate(std::string_view token) const {
    std::shared_lock lock(mu_);
    auto m = store_->engine().find_motorist_by_token(token);
    if (!m) return std::nullopt;
    return m->motorist_id;
}

bool ParkingService::authenticate_device(const SpaceId& space, std::string_view token) const {
    std::shared_lock lock(mu_);
    const auto* s = store_->engine().find_space(space);
    return s && !token.empty() && s->device_token == token;
}

std::vector<SpaceSummary> ParkingService::list_spaces() const {
    std::shared_lock lock(mu_);
    return store_->engine().list_spaces();
}

std::optional<ParkingSpace> ParkingService::space(const SpaceId& id) const {
    std::shared_lock lock(mu_);
    const auto* s = store_->engine().find_space(id);
    return s ? std::optional{*s} : std::nullopt;
}

std::optional<Reservation> ParkingService::reservation(const ReservationId& id) const {
    std::shared_lock lock(mu_);
    const auto* r = store_->engine().find_reservation(id);
    return r ? std::optional{*r} : std::nullopt;
}

std::optional<ParkingSession> ParkingService::session(const SessionId& id) const {
    std::shared_lock lock(mu_);
    const auto* s = store_->engine().find_session(id);
    return s ? std::optional{*s} : std::nullopt;
}

std::optional<Motorist> ParkingService::motorist(const MotoristId& id) const {
    std::shared_lock lock(mu_);
    const auto* m = store_->engine().find_motorist(id);
    return m ? std::optional{*m} : std::nullopt;
}

std::optional<Motorist> ParkingService::motorist_by_uid(const RfidUid& uid) const {
    std::shared_lock lock(mu_);
    return store_->engine().find_motorist_by_uid(uid);
}

std::optional<Claim> ParkingService::active_claim(const RfidUid& uid, const SpaceId& space) const {
    std::shared_lock lock(mu_);
    return store_->engine().active_claim(uid, space);
}

namespace {

std::optional<MotoristId> holder_of(const Engine& engine, const SlotState& st) {
    if (const auto* r = std::get_if<Reserved>(&st)) {
        return engine.find_reservation(r->reservation_id)->motorist_id;
    }
    if (const auto* o = std::get_if<Occupied>(&st)) {
        return engine.find_session(o->session_id)->motorist_id;
    }
    return std::nullopt;
}

} // namespace

std::optional<Claim> ParkingService::active_claim(const MotoristId& motorist) const {
    std::shared_lock lock(mu_);
    return store_->engine().active_claim(motorist);
}

std::optional<MotoristId> ParkingService::slot_holder(const SpaceId& space, SlotNo slot) const {
    std::shared_lock lock(mu_);
    const auto& engine = store_->engine();
    const auto* s = engine.find_space(space);
    if (!s || slot < 1 || slot > s->capacity()) return std::nullopt;
    return holder_of(engine, s->slots[slot - 1]);
}

std::optional<SpaceView> ParkingService::space_view(const SpaceId& id) const {
    std::shared_lock lock(mu_);
    const auto& engine = store_->engine();
    const auto* s = engine.find_space(id);
    if (!s) return std::nullopt;
    SpaceView v{*s, {}};
    for (const auto& st : s->slots) v.holders.push_back(holder_of(engine, st));
    return v;
}

EngineState ParkingService::state() const {
    std::shared_lock lock(mu_);
    return store_->engine().state();
}

} // namespace parking::api
