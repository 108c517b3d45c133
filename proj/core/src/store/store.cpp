#include "parking/store/store.hpp"

#include <iostream>

namespace parking::store {

Store::Store(StoreOptions options) : options_(options), engine_(options.engine) {}

Store::~Store() {
    if (log_ && options_.snapshot_every != 0 && engine_.last_seq() > 0) {
        try {
            write_snapshot_now();
        } catch (const std::exception& e) {
            std::cerr << "snapshot on close failed: " << e.what() << '\n';
        }
    }
}

std::unique_ptr<Store> Store::in_memory(StoreOptions options) {
    return std::unique_ptr<Store>(new Store(options));
}

std::unique_ptr<Store> Store::open(const std::filesystem::path& dir, StoreOptions options) {
    std::filesystem::create_directories(dir);
    std::unique_ptr<Store> store(new Store(options));
    store->dir_ = dir;

    LogContents contents;
    store->log_.emplace(EventLog::open(dir / kLogFile, LogOptions{options.sync,
                                                                   options.max_log_bytes},
                                       &contents));
    store->torn_tail_ = contents.torn_tail;

    // A snapshot ahead of the log (log lost its tail) is unusable; fall back
    // to a full replay.
    std::optional<Snapshot> snap = read_snapshot(dir / kSnapshotFile);
    const std::uint64_t last = contents.events.empty() ? 0 : contents.events.back().seq;
    const Snapshot* base = (snap && snap->as_of_seq <= last) ? &*snap : nullptr;
    store->engine_ = replay(contents.events, base, options.engine);

    store->recovered_ = std::move(contents.events);
    store->attach_hooks();
    return store;
}

void Store::attach_hooks() {
    if (!log_) return;
    engine_.set_journal([this](const EventRecord& r) { log_->append(r); });
    engine_.add_observer([this](const EventRecord& r, const std::optional<StateChange>&) {
        if (options_.snapshot_every != 0 && r.seq % options_.snapshot_every == 0) {
            try {
                write_snapshot_now();
            } catch (const std::exception& e) {
                std::cerr << "periodic snapshot failed: " << e.what() << '\n';
            }
        }
    });
}

std::vector<EventRecord> Store::take_recovered_events() { return std::move(recovered_); }

void Store::write_snapshot_now() {
    if (!log_) return;
    write_snapshot(dir_ / kSnapshotFile, take_snapshot(engine_));
}

} // namespace parking::store
