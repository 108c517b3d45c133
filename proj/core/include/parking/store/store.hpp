#pragma once

#include "parking/domain/engine.hpp"
#include "parking/store/event_log.hpp"
#include "parking/store/snapshot.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace parking::store {

struct StoreOptions {
    EngineConfig engine;
    bool sync = true;
    std::uint64_t max_log_bytes = 0;
    /// Write a snapshot every N applied events; 0 disables periodic snapshots.
    std::uint64_t snapshot_every = 1000;
};

/// The durable engine: every event is appended to the log before the engine
/// applies it, and the engine is rebuilt from snapshot + log on open.
///
/// Data directory layout:
///   events.log     length-prefixed, checksummed event records
///   snapshot.json  latest snapshot (optional)
class Store {
public:
    static constexpr const char* kLogFile = "events.log";
    static constexpr const char* kSnapshotFile = "snapshot.json";

    /// Throws CorruptLog, SnapshotError or StorageError.
    static std::unique_ptr<Store> open(const std::filesystem::path& dir, StoreOptions options);
    /// No durability; for tests and throwaway simulations.
    static std::unique_ptr<Store> in_memory(StoreOptions options = {});

    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    Engine& engine() { return engine_; }
    const Engine& engine() const { return engine_; }

    /// Events read from disk at open, in order. Moved out on first call.
    std::vector<EventRecord> take_recovered_events();
    bool recovered_torn_tail() const { return torn_tail_; }
    bool durable() const { return log_.has_value(); }

    void write_snapshot_now();

private:
    explicit Store(StoreOptions options);
    void attach_hooks();

    StoreOptions options_;
    std::filesystem::path dir_;
    std::optional<EventLog> log_;
    Engine engine_;
    std::vector<EventRecord> recovered_;
    bool torn_tail_ = false;
};

} // namespace parking::store
