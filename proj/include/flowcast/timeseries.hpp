#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "flowcast/ingest.hpp"

namespace flowcast::ts {

/**
 * @brief Regular-interval two-channel series.
 *
 * Bin i covers [start + i*interval, start + (i+1)*interval). Every bin in the
 * covered range is present; empty bins hold zeros.
 */
struct TimeSeries {
    std::int64_t start = 0;
    std::int64_t interval = 1;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> bytes;

    std::size_t size() const noexcept { return counts.size(); }
    std::int64_t bin_start(std::size_t i) const { return start + static_cast<std::int64_t>(i) * interval; }

    /// Contiguous sub-series [first, first + length).
    TimeSeries slice(std::size_t first, std::size_t length) const;

    std::vector<double> count_values() const;
    std::vector<double> byte_values() const;

    bool operator==(const TimeSeries&) const = default;
};

/// Channel selector used by the analysis stages and the CLI.
enum class Channel { count, bytes };

Channel parse_channel(std::string_view name);
std::vector<double> channel_values(const TimeSeries& ts, Channel channel);

/**
 * @brief Incremental binning of a record stream.
 *
 * Bins are aligned to multiples of the interval on the epoch axis. Records may
 * arrive in any order; only occupied bins are held until build().
 */
class SeriesBuilder {
public:
    explicit SeriesBuilder(std::int64_t interval);

    void add(std::int64_t timestamp, std::uint64_t bytes);
    void add(const ingest::TraceRecord& record) { add(record.timestamp, record.bytes); }

    std::size_t records() const noexcept { return records_; }
    TimeSeries build() const;

private:
    std::int64_t interval_;
    std::size_t records_ = 0;
    std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> bins_;
};

TimeSeries aggregate(std::span<const ingest::TraceRecord> records, std::int64_t interval);

enum class StratumKind { day, week, month };

struct Stratum {
    StratumKind kind = StratumKind::day;
    std::uint64_t seed = 0;

    std::int64_t seconds() const;
};

StratumKind parse_stratum(std::string_view name);
std::string_view to_string(StratumKind kind);

/// Picks one window of the stratum length uniformly among the windows that
/// start at whole multiples of the window length from the series start.
TimeSeries stratified_sample(const TimeSeries& ts, const Stratum& stratum);

/// Number of candidate windows stratified_sample chooses from.
std::size_t stratum_candidates(const TimeSeries& ts, StratumKind kind);

/// Chronological split at floor(n * train_fraction).
std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, double train_fraction);

/// CSV with header `bin_start,count,bytes`.
void write_csv(std::ostream& out, const TimeSeries& ts);

/// Reads the CSV form. A single-row file carries no spacing, so the caller's
/// interval is used in that case.
TimeSeries read_csv(std::istream& in, std::int64_t single_row_interval = 3600);

}  // namespace flowcast::ts
