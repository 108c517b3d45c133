#include "parking/store/snapshot.hpp"

#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

namespace parking::store {

namespace {

template <typename K, typename V>
json values_of(const std::map<K, V>& m) {
    json arr = json::array();
    for (const auto& [k, v] : m) arr.push_back(v);
    return arr;
}

template <typename V, typename KeyFn>
auto keyed(const json& arr, const char* what, KeyFn key) {
    if (!arr.is_array()) throw SnapshotError(std::string(what) + " must be an array");
    std::map<std::decay_t<decltype(key(std::declval<V>()))>, V> out;
    for (const auto& item : arr) {
        V v = item.get<V>();
        auto k = key(v);
        if (!out.emplace(k, std::move(v)).second) {
            throw SnapshotError(std::string("duplicate entry in ") + what);
        }
    }
    return out;
}

void sync_file(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

} // namespace

Snapshot take_snapshot(const Engine& engine) { return Snapshot{engine.last_seq(), engine.state()}; }

json snapshot_to_json(const Snapshot& s) {
    return json{{"as_of_seq", s.as_of_seq},
                {"spaces", values_of(s.state.spaces)},
                {"motorists", values_of(s.state.motorists)},
                {"reservations", values_of(s.state.reservations)},
                {"sessions", values_of(s.state.sessions)}};
}

Snapshot snapshot_from_json(const json& doc) {
    try {
        Snapshot s;
        s.as_of_seq = doc.at("as_of_seq").get<std::uint64_t>();
        s.state.last_seq = s.as_of_seq;
        s.state.spaces = keyed<ParkingSpace>(doc.at("spaces"), "spaces",
                                             [](const ParkingSpace& v) { return v.space_id; });
        s.state.motorists = keyed<Motorist>(doc.at("motorists"), "motorists",
                                            [](const Motorist& v) { return v.motorist_id; });
        s.state.reservations = keyed<Reservation>(
            doc.at("reservations"), "reservations",
            [](const Reservation& v) { return v.reservation_id; });
        s.state.sessions = keyed<ParkingSession>(
            doc.at("sessions"), "sessions", [](const ParkingSession& v) { return v.session_id; });
        return s;
    } catch (const SnapshotError&) {
        throw;
    } catch (const std::exception& e) {
        throw SnapshotError(std::string("invalid snapshot: ") + e.what());
    }
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SnapshotError("cannot write " + tmp.string());
        out << snapshot_to_json(snapshot).dump() << '\n';
        if (!out.flush()) throw SnapshotError("write failed: " + tmp.string());
    }
    sync_file(tmp);
    std::filesystem::rename(tmp, path);
    sync_file(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::optional<Snapshot> read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SnapshotError(std::string("snapshot is not JSON: ") + e.what());
    }
    return snapshot_from_json(doc);
}

Engine replay(std::span<const EventRecord> events, const Snapshot* from, EngineConfig config) {
    Engine engine = from ? Engine::restore(from->state, config) : Engine(config);
    const std::uint64_t start = from ? from->as_of_seq : 0;
    for (const auto& e : events) {
        if (e.seq <= start) continue;
        engine.apply(e);
    }
    return engine;
}

} // namespace parking::store
