#include "parking/time.hpp"

#include <charconv>
#include <cstdio>

namespace parking {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (text[i] < '0' || text[i] > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
}

} // namespace

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto tod = t - day;
    const auto h = duration_cast<hours>(tod);
    const auto m = duration_cast<minutes>(tod - h);
    const auto s = duration_cast<seconds>(tod - h - m);
    const auto ms = duration_cast<milliseconds>(tod - h - m - s);

    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                  static_cast<int>(m.count()), static_cast<int>(s.count()),
                  static_cast<int>(ms.count()));
    return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    // YYYY-MM-DDTHH:MM:SS[.fff]Z
    if (text.size() < 20) return std::nullopt;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) ||
        text[7] != '-' || !read_int(text, 8, 2, d) || text[10] != 'T' ||
        !read_int(text, 11, 2, h) || text[13] != ':' || !read_int(text, 14, 2, mi) ||
        text[16] != ':' || !read_int(text, 17, 2, s)) {
        return std::nullopt;
    }
    std::size_t pos = 19;
    int frac_ms = 0;
    if (text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && digits < 3) {
            frac_ms = frac_ms * 10 + (text[pos] - '0');
            ++pos;
            ++digits;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 3; ++digits) frac_ms *= 10;
    }
    if (pos + 1 != text.size() || text[pos] != 'Z') return std::nullopt;
    if (h > 23 || mi > 59 || s > 59) return std::nullopt;

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Timestamp{sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s} +
                     milliseconds{frac_ms}};
}

} // namespace parking
