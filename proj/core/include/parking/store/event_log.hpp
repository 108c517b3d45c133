#pragma once

#include "parking/domain/events.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace parking::store {

/// A record that is complete on disk but fails its checksum, does not parse,
/// or breaks seq continuity. Carries the seq the bad record should have had.
class CorruptLog : public std::runtime_error {
public:
    CorruptLog(std::uint64_t first_bad_seq, std::uint64_t offset, const std::string& why)
        : std::runtime_error("corrupt log at seq " + std::to_string(first_bad_seq) +
                             " (offset " + std::to_string(offset) + "): " + why),
          first_bad_seq_(first_bad_seq), offset_(offset) {}

    std::uint64_t first_bad_seq() const noexcept { return first_bad_seq_; }
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t first_bad_seq_;
    std::uint64_t offset_;
};

class StorageFull : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LogOptions {
    /// fdatasync after every append. Without it a record survives a process
    /// crash but not power loss.
    bool sync = true;
    /// 0 means unbounded.
    std::uint64_t max_bytes = 0;
};

struct LogContents {
    std::vector<EventRecord> events;
    std::uint64_t valid_bytes = 0; // offset just past the last complete record
    bool torn_tail = false;        // trailing partial record present
};

/// Encodes one record: [u32 length LE][u32 crc32 LE][canonical JSON payload].
std::string encode_record(const EventRecord& record);

/// Scans a log. A trailing partial record is reported as torn_tail; any
/// complete-but-invalid record throws CorruptLog. A missing file is empty.
LogContents read_log(const std::filesystem::path& path);

/// Append-only, single-writer event log.
class EventLog {
public:
    /// Opens (creating if needed) and validates the log, truncating a torn
    /// tail so appends resume after the last complete record.
    static EventLog open(const std::filesystem::path& path, LogOptions options,
                         LogContents* contents = nullptr);

    EventLog(EventLog&& other) noexcept;
    EventLog& operator=(EventLog&& other) noexcept;
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;
    ~EventLog();

    /// Durable before return (per LogOptions::sync). The record's seq must be
    /// last_seq() + 1. Returns the seq.
    std::uint64_t append(const EventRecord& record);

    std::uint64_t last_seq() const { return last_seq_; }
    std::uint64_t size_bytes() const { return size_; }
    const std::filesystem::path& path() const { return path_; }

private:
    EventLog(std::filesystem::path path, int fd, LogOptions options, std::uint64_t last_seq,
             std::uint64_t size);

    std::filesystem::path path_;
    int fd_ = -1;
    LogOptions options_;
    std::uint64_t last_seq_ = 0;
    std::uint64_t size_ = 0;
};

} // namespace parking::store
