#include "parking/store/event_log.hpp"

#include "parking/json.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>

#include <fcntl.h>
#include <unistd.h>

namespace parking::store {

namespace {

constexpr std::size_t kHeaderBytes = 8;
// No event comes near this; a bigger length field is damage, not a torn tail.
constexpr std::uint32_t kMaxRecordBytes = 16u << 20;

std::uint32_t crc_of(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    return v;
}

std::string errno_text(const std::string& what) {
    return what + ": " + std::strerror(errno);
}

} // namespace

std::string encode_record(const EventRecord& record) {
    const std::string payload = json(record).dump();
    std::string out;
    out.reserve(kHeaderBytes + payload.size());
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    put_u32(out, crc_of(payload));
    out += payload;
    return out;
}

LogContents read_log(const std::filesystem::path& path) {
    LogContents out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

    std::size_t pos = 0;
    std::uint64_t expected = 1;
    while (pos < data.size()) {
        if (data.size() - pos < kHeaderBytes) {
            out.torn_tail = true;
            break;
        }
        const std::uint32_t len = get_u32(data, pos);
        const std::uint32_t crc = get_u32(data, pos + 4);
        if (len == 0 || len > kMaxRecordBytes) {
            throw CorruptLog(expected, pos, "bad record length " + std::to_string(len));
        }
        if (data.size() - pos - kHeaderBytes < len) {
            out.torn_tail = true;
            break;
        }
        const std::string_view payload(data.data() + pos + kHeaderBytes, len);
        if (crc_of(payload) != crc) throw CorruptLog(expected, pos, "checksum mismatch");

        EventRecord record;
        try {
            record = json::parse(payload).get<EventRecord>();
        } catch (const std::exception& e) {
            throw CorruptLog(expected, pos, std::string("undecodable payload: ") + e.what());
        }
        if (record.seq != expected) {
            throw CorruptLog(expected, pos, "found seq " + std::to_string(record.seq));
        }
        out.events.push_back(std::move(record));
        ++expected;
        pos += kHeaderBytes + len;
        out.valid_bytes = pos;
    }
    return out;
}

EventLog EventLog::open(const std::filesystem::path& path, LogOptions options,
                        LogContents* contents) {
    LogContents scanned = read_log(path);
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw StorageError(errno_text("open " + path.string()));
    if (scanned.torn_tail) {
        if (::ftruncate(fd, static_cast<off_t>(scanned.valid_bytes)) != 0 || ::fsync(fd) != 0) {
            const auto msg = errno_text("truncate " + path.string());
            ::close(fd);
            throw StorageError(msg);
        }
    }
    const std::uint64_t last = scanned.events.empty() ? 0 : scanned.events.back().seq;
    EventLog log(path, fd, options, last, scanned.valid_bytes);
    if (contents) *contents = std::move(scanned);
    return log;
}

EventLog::EventLog(std::filesystem::path path, int fd, LogOptions options, std::uint64_t last_seq,
                   std::uint64_t size)
    : path_(std::move(path)), fd_(fd), options_(options), last_seq_(last_seq), size_(size) {}

EventLog::EventLog(EventLog&& other) noexcept
    : path_(std::move(other.path_)), fd_(std::exchange(other.fd_, -1)), options_(other.options_),
      last_seq_(other.last_seq_), size_(other.size_) {}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = std::exchange(other.fd_, -1);
        options_ = other.options_;
        last_seq_ = other.last_seq_;
        size_ = other.size_;
    }
    return *this;
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

std::uint64_t EventLog::append(const EventRecord& record) {
    if (record.seq != last_seq_ + 1) {
        throw StorageError("append out of order: seq " + std::to_string(record.seq) +
                           " after " + std::to_string(last_seq_));
    }
    const std::string bytes = encode_record(record);
    if (options_.max_bytes != 0 && size_ + bytes.size() > options_.max_bytes) {
        throw StorageFull("log limit of " + std::to_string(options_.max_bytes) + " bytes reached");
    }

    std::size_t written = 0;
    while (written < bytes.size()) {
        const ssize_t n = ::write(fd_, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            // Drop the partial record; if this fails too, open() trims it later.
            const bool trimmed = ::ftruncate(fd_, static_cast<off_t>(size_)) == 0;
            (void)trimmed;
            if (err == ENOSPC || err == EDQUOT) throw StorageFull(std::strerror(err));
            throw StorageError(std::string("write: ") + std::strerror(err));
        }
        written += static_cast<std::size_t>(n);
    }
    if (options_.sync && ::fdatasync(fd_) != 0) throw StorageError(errno_text("fdatasync"));
    size_ += bytes.size();
    last_seq_ = record.seq;
    return record.seq;
}

} // namespace parking::store
