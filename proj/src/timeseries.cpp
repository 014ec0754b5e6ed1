#include "flowcast/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "flowcast/random.hpp"

namespace flowcast::ts {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

template <typename T>
T field(std::string_view text, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::bad_format,
                    "series csv line " + std::to_string(line_no) + ": bad field '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

TimeSeries TimeSeries::slice(std::size_t first, std::size_t length) const {
    if (first + length > size()) throw Error(ErrorCode::bad_dimension, "slice out of range");
    TimeSeries out;
    out.start = bin_start(first);
    out.interval = interval;
    out.counts.assign(counts.begin() + static_cast<std::ptrdiff_t>(first),
                      counts.begin() + static_cast<std::ptrdiff_t>(first + length));
    out.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(first),
                     bytes.begin() + static_cast<std::ptrdiff_t>(first + length));
    return out;
}

std::vector<double> TimeSeries::count_values() const { return {counts.begin(), counts.end()}; }
std::vector<double> TimeSeries::byte_values() const { return {bytes.begin(), bytes.end()}; }

Channel parse_channel(std::string_view name) {
    if (name == "count") return Channel::count;
    if (name == "bytes") return Channel::bytes;
    throw Error(ErrorCode::bad_parameter, "channel must be count or bytes");
}

std::vector<double> channel_values(const TimeSeries& ts, Channel channel) {
    return channel == Channel::count ? ts.count_values() : ts.byte_values();
}

SeriesBuilder::SeriesBuilder(std::int64_t interval) : interval_(interval) {
    if (interval <= 0) throw Error(ErrorCode::bad_parameter, "interval must be positive");
}

void SeriesBuilder::add(std::int64_t timestamp, std::uint64_t bytes) {
    auto& bin = bins_[floor_div(timestamp, interval_)];
    bin.first += 1;
    bin.second += bytes;
    ++records_;
}

TimeSeries SeriesBuilder::build() const {
    if (bins_.empty()) throw Error(ErrorCode::empty_input, "no records to aggregate");
    const auto first = bins_.begin()->first;
    const auto last = bins_.rbegin()->first;
    TimeSeries out;
    out.start = first * interval_;
    out.interval = interval_;
    const auto n = static_cast<std::size_t>(last - first + 1);
    out.counts.assign(n, 0);
    out.bytes.assign(n, 0);
    for (const auto& [bin, value] : bins_) {
        const auto i = static_cast<std::size_t>(bin - first);
        out.counts[i] = value.first;
        out.bytes[i] = value.second;
    }
    return out;
}

TimeSeries aggregate(std::span<const ingest::TraceRecord> records, std::int64_t interval) {
    SeriesBuilder builder(interval);
    for (const auto& r : records) builder.add(r);
    return builder.build();
}

std::int64_t Stratum::seconds() const {
    switch (kind) {
        case StratumKind::day: return 24 * 3600;
        case StratumKind::week: return 7 * 24 * 3600;
        case StratumKind::month: return 30 * 24 * 3600;
    }
    return 0;
}

StratumKind parse_stratum(std::string_view name) {
    if (name == "day") return StratumKind::day;
    if (name == "week") return StratumKind::week;
    if (name == "month") return StratumKind::month;
    throw Error(ErrorCode::bad_parameter, "stratum must be day, week or month");
}

std::string_view to_string(StratumKind kind) {
    switch (kind) {
        case StratumKind::day: return "day";
        case StratumKind::week: return "week";
        case StratumKind::month: return "month";
    }
    return "?";
}

namespace {

std::size_t window_bins(const TimeSeries& ts, StratumKind kind) {
    const auto span = Stratum{kind, 0}.seconds();
    if (ts.interval <= 0 || span % ts.interval != 0) {
        throw Error(ErrorCode::bad_parameter, "interval must divide the stratum length");
    }
    return static_cast<std::size_t>(span / ts.interval);
}

}  // namespace

std::size_t stratum_candidates(const TimeSeries& ts, StratumKind kind) {
    return ts.size() / window_bins(ts, kind);
}

TimeSeries stratified_sample(const TimeSeries& ts, const Stratum& stratum) {
    const auto width = window_bins(ts, stratum.kind);
    const auto candidates = ts.size() / width;
    if (candidates == 0) {
        throw Error(ErrorCode::insufficient_span,
                    "series shorter than one " + std::string(to_string(stratum.kind)));
    }
    Rng rng(stratum.seed);
    const auto pick = static_cast<std::size_t>(rng.index(candidates));
    return ts.slice(pick * width, width);
}

std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::bad_parameter, "train fraction must lie in (0, 1)");
    }
    const auto n = ts.size();
    const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    if (n < 2 || cut == 0 || cut >= n) {
        throw Error(ErrorCode::degenerate_split, "split of " + std::to_string(n) + " bins at " +
                                                     std::to_string(train_fraction) + " leaves an empty part");
    }
    return {ts.slice(0, cut), ts.slice(cut, n - cut)};
}

void write_csv(std::ostream& out, const TimeSeries& ts) {
    out << "bin_start,count,bytes\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << ts.bin_start(i) << ',' << ts.counts[i] << ',' << ts.bytes[i] << '\n';
    }
}

TimeSeries read_csv(std::istream& in, std::int64_t single_row_interval) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::empty_input, "empty series csv");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bin_start,count,bytes") throw Error(ErrorCode::bad_format, "unexpected csv header: " + line);

    std::vector<std::int64_t> starts;
    TimeSeries out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw Error(ErrorCode::bad_format, "series csv line " + std::to_string(line_no));
        }
        std::string_view view(line);
        starts.push_back(field<std::int64_t>(view.substr(0, c1), line_no));
        out.counts.push_back(field<std::uint64_t>(view.substr(c1 + 1, c2 - c1 - 1), line_no));
        out.bytes.push_back(field<std::uint64_t>(view.substr(c2 + 1), line_no));
    }
    if (starts.empty()) throw Error(ErrorCode::empty_input, "series csv has no rows");
    out.start = starts.front();
    out.interval = starts.size() > 1 ? starts[1] - starts[0] : single_row_interval;
    if (out.interval <= 0) throw Error(ErrorCode::bad_format, "bins must be increasing");
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (starts[i] != out.bin_start(i)) {
            throw Error(ErrorCode::bad_format, "bins are not contiguous at row " + std::to_string(i + 1));
        }
    }
    return out;
}

}  // namespace flowcast::ts
