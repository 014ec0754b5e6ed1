#include <doctest.h>

#include <sstream>

#include "flowcast/ingest.hpp"
#include "flowcast/random.hpp"

using namespace flowcast::ingest;

namespace {

TraceRecord ok(std::string_view line) {
    auto r = parse_line(line);
    REQUIRE_MESSAGE(std::holds_alternative<TraceRecord>(r), line);
    return std::get<TraceRecord>(r);
}

RejectReason rejected(std::string_view line) {
    auto r = parse_line(line);
    REQUIRE_MESSAGE(std::holds_alternative<Rejection>(r), line);
    return std::get<Rejection>(r).reason;
}

}  // namespace

TEST_CASE("bracketed timestamp with negative offset") {
    const auto rec = ok(R"(local - - [24/Oct/1994:13:41:41 -0600] "GET index.html HTTP/1.0" 200 150)");
    CHECK(rec.host == "local");
    CHECK(rec.status == 200);
    CHECK(rec.bytes == 150);
    CHECK(rec.path == "index.html");
    // 1994-10-24T19:41:41Z, from an independent calendar conversion.
    CHECK(rec.timestamp == 783027701);
}

TEST_CASE("dash bytes map to zero") {
    const auto rec = ok(R"(remote - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" 304 -)");
    CHECK(rec.bytes == 0);
    CHECK(rec.status == 304);
    CHECK(rec.path == "/x");
    CHECK(rec.timestamp == 804571201);
}

TEST_CASE("garbage is a structural rejection") {
    CHECK(rejected("garbage line with no timestamp") == RejectReason::bad_structure);
    CHECK(rejected("") == RejectReason::bad_structure);
    CHECK(rejected(R"(h - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0")") == RejectReason::bad_structure);
}

TEST_CASE("status outside 100..599 is rejected, not clamped") {
    CHECK(rejected(R"(h - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" 700 5)") == RejectReason::bad_status);
    CHECK(rejected(R"(h - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" 99 5)") == RejectReason::bad_status);
    CHECK(rejected(R"(h - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" abc 5)") == RejectReason::bad_status);
}

TEST_CASE("malformed timestamps") {
    CHECK(rejected(R"(h - - [32/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" 200 5)") == RejectReason::bad_timestamp);
    CHECK(rejected(R"(h - - [01/Foo/1995:00:00:01 -0400] "GET /x HTTP/1.0" 200 5)") == RejectReason::bad_timestamp);
    CHECK(rejected(R"(h - - [01/Jul/1995:25:00:01 -0400] "GET /x HTTP/1.0" 200 5)") == RejectReason::bad_timestamp);
    CHECK(rejected(R"(h - - [01/Jan/1970:00:00:00 +0000] "GET /x HTTP/1.0" 200 5)") == RejectReason::bad_timestamp);
}

TEST_CASE("prose timestamp form is read as UTC") {
    const auto rec = ok("local Mon Oct 24 19:41:41 1994 index.html 200 150");
    CHECK(rec.timestamp == 783027701);
    CHECK(rec.path == "index.html");
    const auto quoted = ok(R"(remote Sat Jul 01 04:00:01 1995 "GET /x HTTP/1.0" 304 -)");
    CHECK(quoted.timestamp == 804571201);
    CHECK(quoted.bytes == 0);
}

TEST_CASE("ingest_file counts and samples") {
    SUBCASE("empty file") {
        std::istringstream in("");
        const auto r = ingest_file(in, [](const TraceRecord&) {});
        CHECK(r.lines_total == 0);
        CHECK(r.lines_ok == 0);
        CHECK(r.lines_rejected == 0);
    }
    SUBCASE("three valid, one invalid") {
        std::istringstream in(
            "a - - [01/Jul/1995:00:00:01 -0400] \"GET /1 HTTP/1.0\" 200 1\n"
            "b - - [01/Jul/1995:00:00:02 -0400] \"GET /2 HTTP/1.0\" 200 2\r\n"
            "nonsense\n"
            "c - - [01/Jul/1995:00:00:03 -0400] \"GET /3 HTTP/1.0\" 200 3\n");
        std::vector<std::string> hosts;
        const auto r = ingest_file(in, [&](const TraceRecord& t) { hosts.push_back(t.host); });
        CHECK(r.lines_total == 4);
        CHECK(r.lines_ok == 3);
        CHECK(r.lines_rejected == 1);
        REQUIRE(r.reject_samples.size() == 1);
        CHECK(r.reject_samples[0] == "nonsense");
        CHECK(hosts == std::vector<std::string>{"a", "b", "c"});
    }
    SUBCASE("sample cap and reject sink") {
        std::istringstream in("x\ny\nz\n");
        IngestOptions opts;
        opts.max_reject_samples = 2;
        int seen = 0;
        opts.on_reject = [&](std::string_view, const Rejection&) { ++seen; };
        const auto r = ingest_file(in, [](const TraceRecord&) {}, opts);
        CHECK(r.reject_samples.size() == 2);
        CHECK(seen == 3);
        CHECK(r.lines_total == r.lines_ok + r.lines_rejected);
    }
}

TEST_CASE("round trip through the canonical form") {
    flowcast::Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        TraceRecord rec{"host" + std::to_string(rng.index(100)),
                        static_cast<std::int64_t>(1 + rng.index(2000000000)),
                        "/p/" + std::to_string(rng.index(1000)) + ".html",
                        static_cast<int>(100 + rng.index(500)),
                        rng.index(1u << 30)};
        const auto again = ok(format_line(rec));
        CHECK(again == rec);
    }
}

TEST_CASE("concatenated input equals concatenated ingests") {
    const std::string a = "a - - [01/Jul/1995:00:00:01 -0400] \"GET /1 HTTP/1.0\" 200 1\nbad\n";
    const std::string b = "b - - [01/Jul/1995:00:00:02 -0400] \"GET /2 HTTP/1.0\" 404 -\n";
    std::vector<TraceRecord> separate, joined;
    std::istringstream ia(a), ib(b), iab(a + b);
    const auto ra = ingest_file(ia, [&](const TraceRecord& t) { separate.push_back(t); });
    const auto rb = ingest_file(ib, [&](const TraceRecord& t) { separate.push_back(t); });
    const auto rab = ingest_file(iab, [&](const TraceRecord& t) { joined.push_back(t); });
    CHECK(separate == joined);
    CHECK(rab.lines_ok == ra.lines_ok + rb.lines_ok);
    CHECK(rab.lines_rejected == ra.lines_rejected + rb.lines_rejected);
}
