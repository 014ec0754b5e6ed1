#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flowcast/error.hpp"
#include "flowcast/tuning.hpp"

using namespace flowcast;
using namespace flowcast::tuning;

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

double min_objective(const SearchResult& r) {
    double m = INFINITY;
    for (const auto& t : r.trials) m = std::min(m, t.objective);
    return m;
}

}  // namespace

TEST_CASE("grid: two categories") {
    ParamSpace space;
    space.add("c", Categorical{{"a", "b"}});
    auto r = grid_search(space, [](const Assignment& p) { return p.at("c") == "a" ? 1.0 : 0.0; });
    CHECK(r.trials.size() == 2);
    CHECK(r.best.params.at("c") == "b");
    CHECK(r.best.objective == 0.0);
}

TEST_CASE("grid: product count and order") {
    ParamSpace space;
    space.add("x", IntRange{0, 1}).add("y", Categorical{{"p", "q", "r"}});
    std::vector<std::string> seen;
    auto r = grid_search(space, [](const Assignment&) { return 1.0; });
    REQUIRE(r.trials.size() == 6);
    for (const auto& t : r.trials) seen.push_back(t.params.at("x") + t.params.at("y"));
    CHECK(seen == std::vector<std::string>{"0p", "0q", "0r", "1p", "1q", "1r"});
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.trials[i].trial_id == i);
    // Ties go to the earliest trial.
    CHECK(r.best.trial_id == 0);
}

TEST_CASE("grid: quadratic minimum") {
    ParamSpace space;
    space.add("x", IntRange{0, 6});
    auto r = grid_search(space, [](const Assignment& p) {
        const double x = static_cast<double>(get_int(p, "x"));
        return (x - 3) * (x - 3);
    });
    CHECK(r.trials.size() == 7);
    CHECK(get_int(r.best.params, "x") == 3);
    CHECK(r.best.objective == min_objective(r));
}

TEST_CASE("grid: real grid values and non-finite dimensions") {
    ParamSpace space;
    space.add("alpha", RealGrid{{0.1, 0.25, 0.5}});
    auto r = grid_search(space, [](const Assignment& p) { return std::abs(get_real(p, "alpha") - 0.3); });
    CHECK(get_real(r.best.params, "alpha") == 0.25);
    ParamSpace cont;
    cont.add("alpha", RealRange{0.0, 1.0});
    CHECK(code_of([&] { grid_search(cont, [](const Assignment&) { return 0.0; }); }) == ErrorCode::non_finite_grid);
}

TEST_CASE("grid: parallel evaluation gives the same records") {
    ParamSpace space;
    space.add("a", IntRange{0, 9}).add("b", IntRange{0, 9});
    auto f = [](const Assignment& p) {
        const double a = static_cast<double>(get_int(p, "a")), b = static_cast<double>(get_int(p, "b"));
        return std::sin(a * 1.3 + b * 0.7);
    };
    auto serial = grid_search(space, f, 1);
    auto parallel = grid_search(space, f, 8);
    REQUIRE(serial.trials.size() == parallel.trials.size());
    for (std::size_t i = 0; i < serial.trials.size(); ++i) {
        CHECK(serial.trials[i].params == parallel.trials[i].params);
        CHECK(serial.trials[i].objective == parallel.trials[i].objective);
    }
    CHECK(serial.best.trial_id == parallel.best.trial_id);
}

TEST_CASE("random: budget of one") {
    ParamSpace space;
    space.add("x", RealRange{0, 1});
    auto r = random_search(space, 1, 5, [](const Assignment& p) { return get_real(p, "x"); });
    REQUIRE(r.trials.size() == 1);
    CHECK(r.best.params == r.trials[0].params);
}

TEST_CASE("random: same seed gives the same trials") {
    ParamSpace space;
    space.add("x", RealRange{-5, 5}).add("n", IntRange{1, 100}).add("lr", RealRange{1e-4, 1, true});
    space.add("k", Categorical{{"aic", "bic", "hqic"}});
    auto f = [](const Assignment& p) { return get_real(p, "x") * get_real(p, "x"); };
    auto a = random_search(space, 50, 77, f, 1);
    auto b = random_search(space, 50, 77, f, 4);
    auto c = random_search(space, 50, 78, f, 1);
    REQUIRE(a.trials.size() == 50);
    bool differs = false;
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(a.trials[i].params == b.trials[i].params);
        differs = differs || a.trials[i].params != c.trials[i].params;
    }
    CHECK(differs);
}

TEST_CASE("random: draws stay inside their domains") {
    ParamSpace space;
    space.add("x", RealRange{-2, 3}).add("n", IntRange{4, 6}).add("lr", RealRange{1e-3, 10, true});
    space.add("g", RealGrid{{0.5, 0.9}});
    auto r = random_search(space, 2000, 1, [](const Assignment&) { return 0.0; });
    std::set<std::int64_t> ints;
    int low_decade = 0;
    for (const auto& t : r.trials) {
        const double x = get_real(t.params, "x");
        CHECK(x >= -2);
        CHECK(x <= 3);
        ints.insert(get_int(t.params, "n"));
        const double lr = get_real(t.params, "lr");
        CHECK(lr >= 1e-3);
        CHECK(lr <= 10);
        if (lr < 1e-2) ++low_decade;
        const double g = get_real(t.params, "g");
        CHECK((g == 0.5 || g == 0.9));
    }
    CHECK(ints == std::set<std::int64_t>{4, 5, 6});
    // Log-uniform over four decades puts about a quarter of draws in the first.
    CHECK(low_decade > 400);
    CHECK(low_decade < 600);
}

TEST_CASE("random: 200 draws find the minimum of a parabola") {
    ParamSpace space;
    space.add("x", RealRange{0, 1});
    for (std::uint64_t seed : {0u, 1u, 42u, 1234u}) {
        auto r = random_search(space, 200, seed, [](const Assignment& p) {
            const double x = get_real(p, "x");
            return (x - 0.5) * (x - 0.5);
        });
        CHECK(std::abs(get_real(r.best.params, "x") - 0.5) <= 0.05);
        CHECK(r.best.objective == min_objective(r));
    }
}

TEST_CASE("failed trials") {
    ParamSpace space;
    space.add("x", IntRange{0, 4});
    auto r = grid_search(space, [](const Assignment& p) {
        const auto x = get_int(p, "x");
        if (x == 1) throw std::runtime_error("boom");
        if (x == 2) return std::nan("");
        return static_cast<double>(10 - x);
    });
    CHECK(r.trials[1].failed);
    CHECK(r.trials[2].failed);
    CHECK(std::isinf(r.trials[1].objective));
    CHECK_FALSE(r.trials[4].failed);
    CHECK(get_int(r.best.params, "x") == 4);
}

TEST_CASE("space validation and parsing") {
    ParamSpace s;
    CHECK(code_of([&] { s.add("a", IntRange{3, 2}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([&] { s.add("a", RealRange{2, 1}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([&] { s.add("a", RealRange{0, 1, true}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([&] { s.add("a", Categorical{}); }) == ErrorCode::bad_parameter);
    s.add("a", IntRange{1, 2});
    CHECK(code_of([&] { s.add("a", IntRange{1, 2}); }) == ErrorCode::bad_parameter);

    auto d = parse_dimension("maxlags=int:1:7");
    CHECK(d.name == "maxlags");
    CHECK(std::get<IntRange>(d.domain).hi == 7);
    auto l = parse_dimension("alpha=real:0.001:1:log");
    CHECK(std::get<RealRange>(l.domain).log);
    auto c = parse_dimension("ic=cat:aic|bic");
    CHECK(std::get<Categorical>(c.domain).values.size() == 2);
    auto g = parse_dimension("gamma=0.1,0.2,0.4");
    CHECK(std::get<RealGrid>(g.domain).values == std::vector<double>{0.1, 0.2, 0.4});
    auto m = parse_dimension("ic=aic,hqic");
    CHECK(std::holds_alternative<Categorical>(m.domain));
    CHECK(code_of([] { parse_dimension("novalue"); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { parse_dimension("x=int:a:3"); }) == ErrorCode::bad_parameter);
}

TEST_CASE("format_real round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -0.0625}) CHECK(std::stod(format_real(v)) == v);
    CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("trial csv") {
    ParamSpace space;
    space.add("x", IntRange{0, 1}).add("k", Categorical{{"a"}});
    auto r = grid_search(space, [](const Assignment& p) { return static_cast<double>(get_int(p, "x")); });
    std::ostringstream out;
    write_trials_csv(out, space, r.trials);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "trial_id,x,k,objective,wall_time");
    std::getline(in, line);
    CHECK(line.rfind("0,0,a,0,", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("1,1,a,1,", 0) == 0);
}
