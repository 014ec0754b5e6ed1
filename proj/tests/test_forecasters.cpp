#include <doctest.h>

#include <cmath>
#include <thread>

#include "flowcast/analysis.hpp"
#include "flowcast/error.hpp"
#include "flowcast/models/forecaster.hpp"
#include "flowcast/random.hpp"
#include "support.hpp"

using namespace flowcast;
using namespace flowcast::models;

namespace {

ErrorCode code_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::io;
}

SeriesMatrix traffic(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    SeriesMatrix m(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        const double phase = 2 * M_PI * static_cast<double>(t % 24) / 24.0;
        m(t, 0) = 100 + 30 * std::sin(phase) + 3 * rng.normal();
        m(t, 1) = 5000 + 900 * std::sin(phase + 0.3) + 80 * rng.normal();
    }
    return m;
}

const char* const kKinds[] = {"var", "hw", "rrp", "bdt"};

}  // namespace

TEST_CASE("contract: unfitted models refuse to predict or serialize") {
    auto hist = traffic(60, 1);
    for (const char* kind : kKinds) {
        CAPTURE(kind);
        auto f = make_forecaster(kind, {});
        CHECK_FALSE(f->fitted());
        CHECK(code_of([&] { f->forecast(hist, 1); }) == ErrorCode::unfitted);
        CHECK(code_of([&] { f->serialize(); }) == ErrorCode::unfitted);
        CHECK(code_of([&] { f->size_bytes(); }) == ErrorCode::unfitted);
    }
}

TEST_CASE("contract: fitted models have a measured size and round trip") {
    auto train = traffic(300, 2);
    for (const char* kind : kKinds) {
        CAPTURE(kind);
        auto f = make_forecaster(kind, {});
        f->fit(train);
        CHECK(f->fitted());
        const auto bytes = f->serialize();
        CHECK(f->size_bytes() == bytes.size());
        CHECK(f->size_bytes() > 0);
        auto g = deserialize_forecaster(bytes);
        CHECK(g->kind() == f->kind());
        CHECK(g->serialize() == bytes);
        auto a = f->forecast(train, 5);
        auto b = g->forecast(train, 5);
        CHECK(a.rows() == 5);
        CHECK(a.cols() == 2);
        CHECK(a == b);
    }
}

TEST_CASE("contract: history checks") {
    auto train = traffic(300, 3);
    for (const char* kind : kKinds) {
        CAPTURE(kind);
        auto f = make_forecaster(kind, {});
        f->fit(train);
        SeriesMatrix short_hist = train.topRows(static_cast<Eigen::Index>(f->min_history()) - 1);
        CHECK(code_of([&] { f->forecast(short_hist, 1); }) == ErrorCode::insufficient_history);
        SeriesMatrix three = SeriesMatrix::Ones(100, 3);
        CHECK(code_of([&] { f->forecast(three, 1); }) == ErrorCode::bad_dimension);
        CHECK_NOTHROW(f->forecast(train.topRows(static_cast<Eigen::Index>(f->min_history())), 2));
    }
}

TEST_CASE("contract: forecasts are safe from many threads") {
    auto train = traffic(400, 4);
    for (const char* kind : kKinds) {
        CAPTURE(kind);
        auto f = make_forecaster(kind, {});
        f->fit(train);
        const auto expect = f->forecast(train, 6);
        std::vector<SeriesMatrix> got(8);
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < got.size(); ++i) {
            pool.emplace_back([&, i] {
                for (int r = 0; r < 20; ++r) got[i] = f->forecast(train, 6);
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& g : got) CHECK(g == expect);
    }
}

TEST_CASE("factory parameters") {
    CHECK(code_of([] { make_forecaster("svr", {}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("var", {{"lags", "3"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("var", {{"maxlags", "x"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("var", {{"maxlags", "-1"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("var", {{"ic", "fpe"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("hw", {{"alpha", "1.5"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("bdt", {{"bits_per_lag", "0"}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { make_forecaster("rrp", {{"stop_depth", "2"}, {"depth", "1"}}); }) == ErrorCode::bad_parameter);
    auto v = make_forecaster("var", {{"maxlags", "2"}, {"ic", "aic"}});
    v->fit(traffic(200, 5));
    auto* var = dynamic_cast<VarForecaster*>(v.get());
    REQUIRE(var != nullptr);
    CHECK(var->model().p <= 2);
    CHECK(var->model().ic_used == InfoCriterion::aic);
}

TEST_CASE("var forecaster is the plain VAR forecast") {
    auto train = traffic(500, 6);
    VarForecaster f;
    f.fit(train);
    auto direct = var_fit(train, 7, InfoCriterion::hqic);
    CHECK(f.model().p == direct.p);
    CHECK(f.forecast(train, 4) == var_forecast(direct, train, 4));
}

TEST_CASE("holt-winters forecaster smooths each channel") {
    auto train = traffic(240, 7);
    HoltWintersForecaster::Config cfg{0.4, 0.1, 0.3, 0.95, 24};
    HoltWintersForecaster f(cfg);
    f.fit(train);
    auto hist = traffic(300, 8);
    auto out = f.forecast(hist, 30);
    for (Eigen::Index c = 0; c < 2; ++c) {
        std::vector<double> x(static_cast<std::size_t>(hist.rows()));
        for (Eigen::Index t = 0; t < hist.rows(); ++t) x[static_cast<std::size_t>(t)] = hist(t, c);
        auto r = analysis::smooth_hw(x, analysis::SmoothingParams(0.4, 0.1, 0.3, 0.95, 24, 30));
        for (Eigen::Index s = 0; s < 30; ++s) CHECK(out(s, c) == r.forecast[static_cast<std::size_t>(s)]);
    }
    CHECK(code_of([] { HoltWintersForecaster(HoltWintersForecaster::Config{0.4, 0.1, 0.3, 0.95, 0}); }) ==
          ErrorCode::bad_parameter);
    HoltWintersForecaster small(HoltWintersForecaster::Config{0.4, 0.1, 0.3, 0.95, 24});
    CHECK(code_of([&] { small.fit(train.topRows(40)); }) == ErrorCode::insufficient_data);
}

TEST_CASE("rrp forecaster walks one tree per channel") {
    auto train = traffic(200, 9);
    RrpForecaster f(RrpForecaster::Config{3, 4, 17});
    f.fit(train);
    REQUIRE(f.trees().size() == 2);
    auto out = f.forecast(train, 1);
    const auto last = train.rows() - 1;
    for (Eigen::Index c = 0; c < 2; ++c) {
        std::vector<double> row;
        for (Eigen::Index ch = 0; ch < 2; ++ch) {
            for (Eigen::Index j = 0; j < 3; ++j) row.push_back(train(last - j, ch));
        }
        row.push_back(train(last, c));
        CHECK(out(0, c) == rrp_predict(f.trees()[static_cast<std::size_t>(c)], row));
    }
    // Predictions stay inside the training range of their channel.
    auto many = f.forecast(train, 50);
    for (Eigen::Index c = 0; c < 2; ++c) {
        CHECK(many.col(c).minCoeff() >= train.col(c).minCoeff());
        CHECK(many.col(c).maxCoeff() <= train.col(c).maxCoeff());
    }
    RrpForecaster same(RrpForecaster::Config{3, 4, 17});
    same.fit(train);
    CHECK(same.serialize() == f.serialize());
}

TEST_CASE("bdt forecaster key layout and predictions") {
    auto train = traffic(300, 10);
    BdtForecaster f(BdtForecaster::Config{3, 2, {6, 2, 8}});
    f.fit(train);
    CHECK(f.key_width() == 12);
    auto fields = f.key_fields();
    REQUIRE(fields.size() == 6);
    CHECK(fields[0].first == "count_lag1");
    CHECK(fields[3].first == "bytes_lag1");
    CHECK(fields[5].second == 2);
    auto key = f.encode(train);
    CHECK(key.width == 12);
    auto out = f.forecast(train, 1);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& t = f.trees()[c];
        CHECK(out(0, static_cast<Eigen::Index>(c)) == t.label_values[bdt_predict(t, key)]);
        CHECK(t.depth() <= 6);
    }
    // Codes rise with the value: a larger latest count never gets a smaller code.
    SeriesMatrix lo = train, hi = train;
    lo(lo.rows() - 1, 0) = -1e9;
    hi(hi.rows() - 1, 0) = 1e9;
    CHECK((f.encode(lo).bits >> 10) == 0);
    CHECK((f.encode(hi).bits >> 10) == 3);

    BdtForecaster wide(BdtForecaster::Config{11, 3, {4, 1, 4}});
    CHECK(code_of([&] { wide.fit(train); }) == ErrorCode::bad_parameter);
}

TEST_CASE("deserialize rejects damaged input") {
    auto f = make_forecaster("var", {});
    f->fit(traffic(200, 11));
    auto bytes = f->serialize();
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK(code_of([&] { deserialize_forecaster(truncated); }) == ErrorCode::bad_format);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(code_of([&] { deserialize_forecaster(trailing); }) == ErrorCode::bad_format);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK(code_of([&] { deserialize_forecaster(magic); }) == ErrorCode::bad_format);
}
