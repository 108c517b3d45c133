#pragma once

#include "parking/domain/engine.hpp"
#include "parking/json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>

namespace parking::store {

/// Full engine state as of a log position. Serialized as one JSON document
/// with top-level keys as_of_seq, spaces, motorists, reservations, sessions.
struct Snapshot {
    std::uint64_t as_of_seq = 0;
    EngineState state;

    bool operator==(const Snapshot&) const = default;
};

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Snapshot take_snapshot(const Engine& engine);

json snapshot_to_json(const Snapshot& snapshot);
/// Rejects documents whose stored slot counts disagree with the slot states.
Snapshot snapshot_from_json(const json& doc);

/// Atomic replace: written to a temp file, synced, then renamed.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);
std::optional<Snapshot> read_snapshot(const std::filesystem::path& path);

/// Rebuilds an engine from a snapshot (if any) plus the events after it.
/// Events at or below the snapshot's as_of_seq are skipped.
Engine replay(std::span<const EventRecord> events, const Snapshot* from = nullptr,
              EngineConfig config = {});

} // namespace parking::store
