#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowcast/error.hpp"

namespace flowcast::ingest {

/// One request from an HTTP access log.
struct TraceRecord {
    std::string host;
    std::int64_t timestamp = 0;  ///< epoch seconds (UTC)
    std::string path;
    int status = 0;
    std::uint64_t bytes = 0;

    bool operator==(const TraceRecord&) const = default;
};

enum class RejectReason { bad_timestamp, bad_status, bad_structure };

std::string_view to_string(RejectReason reason);

struct Rejection {
    RejectReason reason;
    std::string detail;
};

using ParseResult = std::variant<TraceRecord, Rejection>;

/**
 * @brief Parses one access-log line.
 *
 * Two layouts are accepted, tried in this order:
 *   - Common Log Format: `host ident user [DD/Mon/YYYY:HH:MM:SS +ZZZZ] "request" status bytes`
 *   - `host Day Mon DD HH:MM:SS YYYY "request" status bytes` (taken as UTC)
 *
 * The request may be unquoted in the second layout, in which case it is a
 * single path token. A bytes field of "-" is read as zero.
 */
ParseResult parse_line(std::string_view line);

/// Canonical CLF rendering used by the round-trip property.
std::string format_line(const TraceRecord& record);

struct IngestReport {
    std::size_t lines_total = 0;
    std::size_t lines_ok = 0;
    std::size_t lines_rejected = 0;
    std::vector<std::string> reject_samples;
};

/// Raised when the stream fails mid-file; carries what was read so far.
class IngestError : public Error {
public:
    IngestError(const std::string& what, IngestReport partial)
        : Error(ErrorCode::io, what), partial_(std::move(partial)) {}

    const IngestReport& partial() const noexcept { return partial_; }

private:
    IngestReport partial_;
};

using RecordSink = std::function<void(const TraceRecord&)>;
using RejectSink = std::function<void(std::string_view line, const Rejection&)>;

struct IngestOptions {
    std::size_t max_reject_samples = 10;
    RejectSink on_reject;  ///< optional, sees every rejected line
};

/// Streams `source` line by line, delivering accepted records in file order.
IngestReport ingest_file(std::istream& source, const RecordSink& on_record,
                         const IngestOptions& options = {});

}  // namespace flowcast::ingest
