#include <doctest.h>

#include <bit>
#include <sstream>

#include "flowcast/error.hpp"
#include "flowcast/p4c.hpp"
#include "flowcast/random.hpp"
#include "oracles/random_bdt.hpp"

using namespace flowcast;
using namespace flowcast::p4c;
using models::BdtParams;

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

BitDecisionTree leaf_tree(unsigned width, std::uint32_t label) {
    BitDecisionTree t;
    t.key_width = width;
    t.n_labels = 8;
    t.nodes.push_back({});
    t.nodes[0].label = label;
    return t;
}

BitDecisionTree split_tree(unsigned width, unsigned bit, std::uint32_t left, std::uint32_t right) {
    BitDecisionTree t;
    t.key_width = width;
    t.n_labels = 8;
    t.nodes.resize(3);
    t.nodes[0] = {false, bit, 1, 2, 0, 0.0};
    t.nodes[1].label = left;
    t.nodes[2].label = right;
    return t;
}

BitDecisionTree xor_tree() {
    std::vector<std::uint64_t> keys;
    std::vector<double> y;
    for (std::uint64_t k = 0; k < 16; ++k) {
        keys.push_back(k);
        y.push_back(((k >> 2) & 1U) != (k & 1U) ? 1.0 : 0.0);
    }
    return models::bdt_fit(keys, y, 4, BdtParams{4, 1, 2});
}

}  // namespace

TEST_CASE("compile: single leaf is a catch-all") {
    auto table = compile(leaf_tree(6, 3));
    REQUIRE(table.rules().size() == 1);
    CHECK(table.rules()[0].mask == 0);
    CHECK(table.rules()[0].value == 0);
    CHECK(table.rules()[0].label == 3);
    for (std::uint64_t k = 0; k < 64; ++k) CHECK(lookup(table, {k, 6}) == 3);
}

TEST_CASE("compile: one split on the top bit") {
    auto table = compile(split_tree(4, 0, 1, 2));
    REQUIRE(table.rules().size() == 2);
    CHECK(table.rules()[0] == TernaryRule{0b0000, 0b1000, 1, table.rules()[0].priority});
    CHECK(table.rules()[1] == TernaryRule{0b1000, 0b1000, 2, table.rules()[1].priority});
}

TEST_CASE("compile: xor tree") {
    auto tree = xor_tree();
    auto table = compile(tree);
    CHECK(table.rules().size() == tree.leaf_count());
    CHECK(table.rules().size() == 4);
    for (const auto& r : table.rules()) CHECK(std::popcount(r.mask) == 2);
    for (std::uint64_t k = 0; k < 16; ++k) CHECK(lookup(table, {k, 4}) == models::bdt_predict(tree, {k, 4}));
    auto cap = check_constraints(table, 1 << 20, 8);
    CHECK(cap.entry_bits == 16);
    CHECK(cap.total_bits == 64);
    CHECK(cap.fits);
}

TEST_CASE("lookup examples") {
    TernaryRuleTable empty(8, 5, {});
    CHECK(lookup(empty, {0xAB, 8}) == 5);
    TernaryRuleTable all(8, 5, {TernaryRule{0, 0, 7, 1}});
    for (std::uint64_t k = 0; k < 256; ++k) CHECK(lookup(all, {k, 8}) == 7);
    TernaryRuleTable overlap(8, 0, {TernaryRule{0x80, 0x80, 2, 2}, TernaryRule{0xC0, 0xC0, 1, 1}});
    CHECK(lookup(overlap, {0xC5, 8}) == 1);
    CHECK(lookup(overlap, {0x85, 8}) == 2);
    CHECK(lookup(overlap, {0x05, 8}) == 0);
    CHECK(code_of([&] { lookup(overlap, {1, 7}); }) == ErrorCode::bad_dimension);
}

TEST_CASE("table validation") {
    CHECK(code_of([] { TernaryRuleTable(8, 0, {TernaryRule{0, 0, 1, 1}, TernaryRule{1, 1, 2, 1}}); }) ==
          ErrorCode::bad_parameter);
    CHECK(code_of([] { TernaryRuleTable(4, 0, {TernaryRule{0x1, 0x0, 1, 1}}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([] { TernaryRuleTable(4, 0, {TernaryRule{0x10, 0x10, 1, 1}}); }) == ErrorCode::bad_parameter);
    TernaryRuleTable t(4, 0, {TernaryRule{0, 0, 1, 9}, TernaryRule{0, 0, 2, -3}});
    CHECK(t.rules()[0].priority == -3);
}

TEST_CASE("capacity arithmetic") {
    TernaryRuleTable one(16, 0, {TernaryRule{0, 0, 1, 1}});
    auto a = check_constraints(one, 1024, 8);
    CHECK(a.entries == 1);
    CHECK(a.entry_bits == 40);
    CHECK(a.total_bits == 40);
    CHECK(a.fits);
    std::vector<TernaryRule> rules;
    for (int i = 0; i < 100; ++i) rules.push_back(TernaryRule::exact(static_cast<std::uint64_t>(i), 16, 1, i));
    auto b = check_constraints(TernaryRuleTable(16, 0, rules), 1024, 8);
    CHECK(b.total_bits == 4000);
    CHECK_FALSE(b.fits);
    CHECK(check_constraints(TernaryRuleTable(16, 0, rules), 4000, 8).fits);
    CHECK_FALSE(check_constraints(TernaryRuleTable(16, 0, rules), 3999, 8).fits);
}

TEST_CASE("verify: compiled tables are equivalent") {
    auto tree = xor_tree();
    auto v = verify_equivalence(tree, compile(tree));
    CHECK(v.equivalent);
    CHECK(v.keys_checked == 16);
    CHECK(v.mismatches == 0);
    CHECK_FALSE(v.counterexample.has_value());
}

TEST_CASE("verify: a corrupted label is caught") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto tree = oracle::random_tree(10, 6, seed);
        auto table = compile(tree);
        if (table.rules().size() < 2) continue;
        auto rules = table.rules();
        const std::size_t victim = seed % rules.size();
        rules[victim].label = (rules[victim].label + 1) % 8;
        TernaryRuleTable bad(table.key_width(), table.default_label(), rules);
        auto v = verify_equivalence(tree, bad);
        CHECK_FALSE(v.equivalent);
        REQUIRE(v.counterexample.has_value());
        CHECK(rules[victim].matches(*v.counterexample));
        CHECK(v.tree_label == oracle::walk(tree, *v.counterexample));
        CHECK(v.table_label == rules[victim].label);
        CHECK(v.mismatches == (1ULL << (10 - std::popcount(rules[victim].mask))));
        auto s = verify_equivalence(tree, bad, VerifyMode::sampled(seed, 5000));
        CHECK(s.keys_checked == 5000);
        CHECK_FALSE(s.equivalent);
    }
}

TEST_CASE("verify: random 12-bit trees, exhaustive") {
    std::uint64_t mismatches = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto tree = oracle::random_tree(12, 8, seed);
        auto v = verify_equivalence(tree, compile(tree));
        mismatches += v.mismatches;
        CHECK(v.keys_checked == 4096);
    }
    CHECK(mismatches == 0);
}

TEST_CASE("compiled tables partition the key space") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const unsigned width = 4 + static_cast<unsigned>(seed % 13);
        auto tree = oracle::random_tree(width, 7, seed);
        auto table = compile(tree);
        CHECK(table.rules().size() == tree.leaf_count());
        CHECK(table.rules().size() <= (1ULL << tree.depth()));
        for (std::uint64_t k = 0; k < (1ULL << width); ++k) {
            int hits = 0;
            for (const auto& r : table.rules()) hits += r.matches(k);
            CHECK(hits == 1);
        }
        for (const auto& r : table.rules()) CHECK((r.value & ~r.mask) == 0);
    }
}

TEST_CASE("verify: wide trees use sampling") {
    auto tree = oracle::random_tree(40, 10, 8);
    auto table = compile(tree);
    auto v = verify_equivalence(tree, table, VerifyMode::sampled(3, 20000));
    CHECK(v.equivalent);
    CHECK(v.keys_checked == 20000);
    CHECK(code_of([&] { verify_equivalence(tree, table); }) == ErrorCode::bad_parameter);
    auto narrow = oracle::random_tree(8, 4, 1);
    CHECK(code_of([&] { verify_equivalence(narrow, table); }) == ErrorCode::bad_dimension);
}

TEST_CASE("exact and prefix rules have the expected mask shapes") {
    Rng rng(12);
    for (int round = 0; round < 500; ++round) {
        const unsigned width = 1 + static_cast<unsigned>(rng.index(64));
        const std::uint64_t key = rng.next_u64() & width_mask(width);
        auto e = TernaryRule::exact(key, width, 1, 1);
        CHECK(e.mask == width_mask(width));
        CHECK(e.value == key);
        CHECK(e.matches(key));
        const unsigned len = static_cast<unsigned>(rng.index(width + 1));
        auto p = TernaryRule::prefix(key, len, width, 2, 1);
        CHECK(std::popcount(p.mask) == static_cast<int>(len));
        // Leading ones then trailing zeros within the width.
        const std::uint64_t inverted = ~p.mask & width_mask(width);
        CHECK(((inverted + 1) & inverted) == 0);
        CHECK((p.value & ~p.mask) == 0);
        CHECK(p.matches(key));
    }
    CHECK(width_mask(64) == ~0ULL);
    CHECK(width_mask(3) == 0b111);
}

TEST_CASE("key layout") {
    KeyLayout layout({{"count_lag1", 3}, {"bytes_lag1", 5}});
    CHECK(layout.width() == 8);
    CHECK(layout.offset("bytes_lag1") == 3);
    auto k = layout.pack({0b101, 0b00011});
    CHECK(k.bits == 0b10100011);
    CHECK(k.width == 8);
    CHECK(code_of([&] { layout.pack({8, 0}); }) == ErrorCode::bad_parameter);
    CHECK(code_of([&] { layout.offset("nope"); }) == ErrorCode::bad_parameter);
}

TEST_CASE("table text round trip") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto table = compile(oracle::random_tree(20 + static_cast<unsigned>(seed), 6, seed));
        std::ostringstream out;
        write_table(out, table);
        std::istringstream in(out.str());
        CHECK(read_table(in) == table);
    }
    TernaryRuleTable t(8, 2, {TernaryRule{0xA0, 0xF0, 3, 1}});
    std::ostringstream out;
    write_table(out, t);
    CHECK(out.str() == "TERNTBL v1 width=8 default=2\nP 1 V 0xa0 M 0xf0 A 3\n");
    std::istringstream bad("TERNTBL v2 width=8 default=2\n");
    CHECK(code_of([&] { read_table(bad); }) == ErrorCode::bad_format);
}
