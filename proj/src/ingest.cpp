#include "flowcast/ingest.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace flowcast::ingest {
namespace {

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<std::string_view, 7> kWeekdays = {"Mon", "Tue", "Wed", "Thu",
                                                       "Fri", "Sat", "Sun"};

template <typename T>
bool parse_int(std::string_view text, T& out) {
    if (text.empty()) return false;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

int month_index(std::string_view name) {
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
        if (kMonths[i] == name) return static_cast<int>(i) + 1;
    }
    return 0;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string_view next_token(std::string_view& rest) {
    rest = trim(rest);
    const auto end = rest.find_first_of(" \t");
    auto token = rest.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    return token;
}

std::optional<std::int64_t> civil_to_epoch(int year, int month, int day, int hh, int mm, int ss) {
    using namespace std::chrono;
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) return std::nullopt;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

bool parse_hms(std::string_view text, int& hh, int& mm, int& ss) {
    if (text.size() != 8 || text[2] != ':' || text[5] != ':') return false;
    return parse_int(text.substr(0, 2), hh) && parse_int(text.substr(3, 2), mm) &&
           parse_int(text.substr(6, 2), ss);
}

// "24/Oct/1994:13:41:41 -0600"
std::optional<std::int64_t> parse_clf_time(std::string_view text) {
    const auto space = text.find(' ');
    if (space == std::string_view::npos) return std::nullopt;
    const auto stamp = text.substr(0, space);
    const auto zone = trim(text.substr(space + 1));
    if (stamp.size() != 20 || stamp[2] != '/' || stamp[6] != '/' || stamp[11] != ':') {
        return std::nullopt;
    }
    int day = 0, year = 0, hh = 0, mm = 0, ss = 0;
    const int month = month_index(stamp.substr(3, 3));
    if (month == 0 || !parse_int(stamp.substr(0, 2), day) || !parse_int(stamp.substr(7, 4), year) ||
        !parse_hms(stamp.substr(12, 8), hh, mm, ss)) {
        return std::nullopt;
    }
    if (zone.size() != 5 || (zone[0] != '+' && zone[0] != '-')) return std::nullopt;
    int zh = 0, zm = 0;
    if (!parse_int(zone.substr(1, 2), zh) || !parse_int(zone.substr(3, 2), zm) || zm > 59) {
        return std::nullopt;
    }
    auto local = civil_to_epoch(year, month, day, hh, mm, ss);
    if (!local) return std::nullopt;
    const int offset = (zh * 3600 + zm * 60) * (zone[0] == '-' ? -1 : 1);
    return *local - offset;
}

// "Mon Oct 24 13:41:41 1994"
std::optional<std::int64_t> parse_prose_time(std::string_view weekday, std::string_view mon,
                                             std::string_view dd, std::string_view hms,
                                             std::string_view yyyy) {
    bool known_day = false;
    for (auto d : kWeekdays) known_day = known_day || d == weekday;
    const int month = month_index(mon);
    int day = 0, year = 0, hh = 0, mm = 0, ss = 0;
    if (!known_day || month == 0 || !parse_int(dd, day) || !parse_int(yyyy, year) ||
        !parse_hms(hms, hh, mm, ss)) {
        return std::nullopt;
    }
    return civil_to_epoch(year, month, day, hh, mm, ss);
}

std::string request_path(std::string_view request) {
    std::string_view rest = request;
    auto first = next_token(rest);
    auto second = next_token(rest);
    // "GET /x HTTP/1.0" -> "/x"; a bare "/x" is its own path.
    return std::string(second.empty() ? first : second);
}

Rejection reject(RejectReason reason, std::string detail) { return {reason, std::move(detail)}; }

// Shared tail: `"request" status bytes` or `path status bytes`.
ParseResult parse_tail(std::string host, std::int64_t timestamp, std::string_view rest) {
    rest = trim(rest);
    std::string path;
    if (!rest.empty() && rest.front() == '"') {
        const auto close = rest.rfind('"');
        if (close == 0) return reject(RejectReason::bad_structure, "unterminated request");
        path = request_path(rest.substr(1, close - 1));
        rest = rest.substr(close + 1);
    } else {
        path = std::string(next_token(rest));
    }
    const auto status_text = next_token(rest);
    const auto bytes_text = next_token(rest);
    if (status_text.empty() || bytes_text.empty() || !trim(rest).empty()) {
        return reject(RejectReason::bad_structure, "expected status and bytes fields");
    }
    int status = 0;
    if (!parse_int(status_text, status) || status < 100 || status > 599) {
        return reject(RejectReason::bad_status, std::string(status_text));
    }
    std::uint64_t bytes = 0;
    if (bytes_text != "-" && !parse_int(bytes_text, bytes)) {
        return reject(RejectReason::bad_structure, "bytes field");
    }
    if (timestamp <= 0) return reject(RejectReason::bad_timestamp, "non-positive epoch");
    return TraceRecord{std::move(host), timestamp, std::move(path), status, bytes};
}

}  // namespace

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::bad_timestamp: return "bad-timestamp";
        case RejectReason::bad_status: return "bad-status";
        case RejectReason::bad_structure: return "bad-structure";
    }
    return "unknown";
}

ParseResult parse_line(std::string_view line) {
    line = trim(line);
    std::string_view rest = line;
    const auto host = next_token(rest);
    if (host.empty()) return reject(RejectReason::bad_structure, "empty line");

    const auto open = rest.find('[');
    if (open != std::string_view::npos) {
        const auto close = rest.find(']', open);
        if (close == std::string_view::npos) return reject(RejectReason::bad_structure, "unclosed [");
        auto ts = parse_clf_time(rest.substr(open + 1, close - open - 1));
        if (!ts) return reject(RejectReason::bad_timestamp, std::string(rest.substr(open, close - open + 1)));
        return parse_tail(std::string(host), *ts, rest.substr(close + 1));
    }

    std::array<std::string_view, 5> parts;
    for (auto& p : parts) p = next_token(rest);
    if (parts[4].empty()) return reject(RejectReason::bad_structure, "no timestamp");
    auto ts = parse_prose_time(parts[0], parts[1], parts[2], parts[3], parts[4]);
    if (!ts) {
        // Only call it a timestamp problem when the line looks like it had one.
        const bool looks_like_time = month_index(parts[1]) != 0 || parts[3].find(':') != std::string_view::npos;
        return reject(looks_like_time ? RejectReason::bad_timestamp : RejectReason::bad_structure,
                      "unrecognised timestamp");
    }
    return parse_tail(std::string(host), *ts, rest);
}

std::string format_line(const TraceRecord& record) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{record.timestamp}};
    const auto day_point = floor<days>(tp);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{tp - day_point};
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%02u/%s/%04d:%02d:%02d:%02d +0000",
                  static_cast<unsigned>(ymd.day()),
                  kMonths[static_cast<unsigned>(ymd.month()) - 1].data(), static_cast<int>(ymd.year()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return record.host + " - - [" + stamp + "] \"GET " + record.path + " HTTP/1.0\" " +
           std::to_string(record.status) + " " + std::to_string(record.bytes);
}

IngestReport ingest_file(std::istream& source, const RecordSink& on_record,
                         const IngestOptions& options) {
    IngestReport report;
    std::string line;
    while (std::getline(source, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++report.lines_total;
        auto result = parse_line(line);
        if (auto* record = std::get_if<TraceRecord>(&result)) {
            ++report.lines_ok;
            on_record(*record);
            continue;
        }
        ++report.lines_rejected;
        if (report.reject_samples.size() < options.max_reject_samples) {
            report.reject_samples.push_back(line);
        }
        if (options.on_reject) options.on_reject(line, std::get<Rejection>(result));
    }
    if (source.bad()) throw IngestError("read failure", std::move(report));
    return report;
}

}  // namespace flowcast::ingest
