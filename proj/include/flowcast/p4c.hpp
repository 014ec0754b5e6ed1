#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flowcast/models/bdt.hpp"

namespace flowcast::p4c {

using models::BitDecisionTree;
using models::BitKey;

/// Matches when (key & mask) == value. Lower priority number wins.
struct TernaryRule {
    std::uint64_t value = 0;
    std::uint64_t mask = 0;
    std::uint32_t label = 0;
    std::int64_t priority = 0;

    bool matches(std::uint64_t key) const noexcept { return (key & mask) == value; }

    static TernaryRule exact(std::uint64_t key, unsigned width, std::uint32_t label, std::int64_t priority);
    /// Leading `prefix_len` bits significant, the rest don't-care.
    static TernaryRule prefix(std::uint64_t key, unsigned prefix_len, unsigned width, std::uint32_t label,
                              std::int64_t priority);

    bool operator==(const TernaryRule&) const = default;
};

/// All-ones mask of `width` bits.
std::uint64_t width_mask(unsigned width);

class TernaryRuleTable {
public:
    TernaryRuleTable() = default;
    /// Sorts by priority. Throws bad_parameter on duplicate priorities, bits
    /// outside the width, or value bits under a zero mask.
    TernaryRuleTable(unsigned key_width, std::uint32_t default_label, std::vector<TernaryRule> rules);

    unsigned key_width() const noexcept { return width_; }
    std::uint32_t default_label() const noexcept { return default_label_; }
    const std::vector<TernaryRule>& rules() const noexcept { return rules_; }

    bool operator==(const TernaryRuleTable&) const = default;

private:
    unsigned width_ = 0;
    std::uint32_t default_label_ = 0;
    std::vector<TernaryRule> rules_;
};

/// One rule per leaf; priorities follow the pre-order position of the leaf.
TernaryRuleTable compile(const BitDecisionTree& tree);

std::uint32_t lookup(const TernaryRuleTable& table, BitKey key);

struct CapacityReport {
    std::size_t entries = 0;
    std::size_t entry_bits = 0;  ///< value + mask + label
    std::size_t total_bits = 0;
    std::size_t capacity_bits = 0;
    bool fits = false;
};

CapacityReport check_constraints(const TernaryRuleTable& table, std::size_t capacity_bits, unsigned label_bits);

struct VerifyMode {
    bool exhaustive = true;
    std::uint64_t seed = 0;
    std::size_t samples = 0;

    static VerifyMode all_keys() { return {}; }
    static VerifyMode sampled(std::uint64_t seed, std::size_t n) { return {false, seed, n}; }
};

struct Verdict {
    bool equivalent = true;
    std::uint64_t keys_checked = 0;
    std::uint64_t mismatches = 0;
    std::optional<std::uint64_t> counterexample;  ///< first mismatching key
    std::uint32_t tree_label = 0;                 ///< labels at the counterexample
    std::uint32_t table_label = 0;
};

/// Exhaustive mode needs key_width <= 24.
Verdict verify_equivalence(const BitDecisionTree& tree, const TernaryRuleTable& table,
                           VerifyMode mode = VerifyMode::all_keys());

inline constexpr unsigned kMaxExhaustiveWidth = 24;

/// Ordered header fields that make up the match key, most significant first.
struct KeyField {
    std::string name;
    unsigned width = 0;
};

class KeyLayout {
public:
    explicit KeyLayout(std::vector<KeyField> fields);

    unsigned width() const noexcept { return width_; }
    const std::vector<KeyField>& fields() const noexcept { return fields_; }
    /// Bit index (0 = most significant) of the first bit of `name`.
    unsigned offset(const std::string& name) const;
    /// Concatenates field values; each must fit its width.
    BitKey pack(const std::vector<std::uint64_t>& values) const;

private:
    std::vector<KeyField> fields_;
    unsigned width_ = 0;
};

/// TERNTBL v1 text: header `TERNTBL v1 width=<w> default=<label>` then
/// `P <priority> V <hex> M <hex> A <label>` per rule.
void write_table(std::ostream& out, const TernaryRuleTable& table);
TernaryRuleTable read_table(std::istream& in);

}  // namespace flowcast::p4c
