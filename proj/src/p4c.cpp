#include "flowcast/p4c.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <set>
#include <sstream>

#include "flowcast/error.hpp"
#include "flowcast/random.hpp"

namespace flowcast::p4c {
namespace {

std::uint64_t bit_mask(unsigned width, unsigned index) { return std::uint64_t{1} << (width - 1 - index); }

Error bad_table(const std::string& what) { return Error(ErrorCode::bad_format, "table: " + what); }

template <typename T>
T parse_field(const std::string& token, const std::string& prefix, int base = 10) {
    if (token.rfind(prefix, 0) != 0) throw bad_table("expected " + prefix + " in '" + token + "'");
    const char* first = token.data() + prefix.size();
    const char* last = token.data() + token.size();
    T out{};
    auto [ptr, ec] = std::from_chars(first, last, out, base);
    if (ec != std::errc() || ptr != last || first == last) throw bad_table("bad number '" + token + "'");
    return out;
}

}  // namespace

std::uint64_t width_mask(unsigned width) {
    return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

TernaryRule TernaryRule::exact(std::uint64_t key, unsigned width, std::uint32_t label, std::int64_t priority) {
    const auto m = width_mask(width);
    return {key & m, m, label, priority};
}

TernaryRule TernaryRule::prefix(std::uint64_t key, unsigned prefix_len, unsigned width, std::uint32_t label,
                                std::int64_t priority) {
    if (prefix_len > width) throw Error(ErrorCode::bad_parameter, "prefix longer than key");
    const auto m = width_mask(width) & ~width_mask(width - prefix_len);
    return {key & m, m, label, priority};
}

TernaryRuleTable::TernaryRuleTable(unsigned key_width, std::uint32_t default_label, std::vector<TernaryRule> rules)
    : width_(key_width), default_label_(default_label), rules_(std::move(rules)) {
    if (key_width == 0 || key_width > 64) throw Error(ErrorCode::bad_parameter, "key width must be 1..64");
    const auto all = width_mask(key_width);
    std::set<std::int64_t> seen;
    for (const auto& r : rules_) {
        if (!seen.insert(r.priority).second) {
            throw Error(ErrorCode::bad_parameter, "duplicate priority " + std::to_string(r.priority));
        }
        if ((r.mask & ~all) != 0 || (r.value & ~r.mask) != 0) {
            throw Error(ErrorCode::bad_parameter, "rule with priority " + std::to_string(r.priority) +
                                                      " sets bits outside its mask");
        }
    }
    std::sort(rules_.begin(), rules_.end(), [](const auto& a, const auto& b) { return a.priority < b.priority; });
}

TernaryRuleTable compile(const BitDecisionTree& tree) {
    tree.validate();
    std::vector<TernaryRule> rules;
    struct Frame {
        std::size_t node;
        std::uint64_t value, mask;
    };
    std::vector<Frame> stack{{0, 0, 0}};
    while (!stack.empty()) {
        const auto f = stack.back();
        stack.pop_back();
        const auto& n = tree.nodes[f.node];
        if (n.leaf) {
            rules.push_back({f.value, f.mask, n.label, static_cast<std::int64_t>(rules.size()) + 1});
            continue;
        }
        const auto b = bit_mask(tree.key_width, n.bit);
        // Right is pushed first so the left subtree is emitted first.
        stack.push_back({n.right, f.value | b, f.mask | b});
        stack.push_back({n.left, f.value, f.mask | b});
    }
    return TernaryRuleTable(tree.key_width, 0, std::move(rules));
}

std::uint32_t lookup(const TernaryRuleTable& table, BitKey key) {
    if (key.width != table.key_width()) {
        throw Error(ErrorCode::bad_dimension, "key width " + std::to_string(key.width) + " but table width " +
                                                  std::to_string(table.key_width()));
    }
    for (const auto& r : table.rules()) {
        if (r.matches(key.bits)) return r.label;
    }
    return table.default_label();
}

CapacityReport check_constraints(const TernaryRuleTable& table, std::size_t capacity_bits, unsigned label_bits) {
    if (capacity_bits == 0) throw Error(ErrorCode::bad_parameter, "capacity must be positive");
    CapacityReport r;
    r.entries = table.rules().size();
    r.entry_bits = 2 * static_cast<std::size_t>(table.key_width()) + label_bits;
    r.total_bits = r.entries * r.entry_bits;
    r.capacity_bits = capacity_bits;
    r.fits = r.total_bits <= capacity_bits;
    return r;
}

Verdict verify_equivalence(const BitDecisionTree& tree, const TernaryRuleTable& table, VerifyMode mode) {
    if (tree.key_width != table.key_width()) throw Error(ErrorCode::bad_dimension, "tree and table widths differ");
    const unsigned w = table.key_width();
    Verdict v;
    auto check = [&](std::uint64_t bits) {
        const BitKey key{bits, w};
        const auto expected = models::bdt_predict(tree, key);
        const auto got = lookup(table, key);
        ++v.keys_checked;
        if (expected != got) {
            ++v.mismatches;
            if (!v.counterexample) {
                v.counterexample = bits;
                v.tree_label = expected;
                v.table_label = got;
            }
        }
    };
    if (mode.exhaustive) {
        if (w > kMaxExhaustiveWidth) {
            throw Error(ErrorCode::bad_parameter, "exhaustive check limited to " + std::to_string(kMaxExhaustiveWidth) +
                                                      " bits; use sampling");
        }
        for (std::uint64_t k = 0; k < (std::uint64_t{1} << w); ++k) check(k);
    } else {
        Rng rng(mode.seed);
        for (std::size_t i = 0; i < mode.samples; ++i) check(rng.next_u64() & width_mask(w));
    }
    v.equivalent = v.mismatches == 0;
    return v;
}

KeyLayout::KeyLayout(std::vector<KeyField> fields) : fields_(std::move(fields)) {
    std::set<std::string> names;
    for (const auto& f : fields_) {
        if (f.width == 0 || !names.insert(f.name).second) {
            throw Error(ErrorCode::bad_parameter, "key fields need unique names and non-zero widths");
        }
        width_ += f.width;
    }
    if (width_ == 0 || width_ > 64) throw Error(ErrorCode::bad_parameter, "key layout must total 1..64 bits");
}

unsigned KeyLayout::offset(const std::string& name) const {
    unsigned at = 0;
    for (const auto& f : fields_) {
        if (f.name == name) return at;
        at += f.width;
    }
    throw Error(ErrorCode::bad_parameter, "no key field " + name);
}

BitKey KeyLayout::pack(const std::vector<std::uint64_t>& values) const {
    if (values.size() != fields_.size()) throw Error(ErrorCode::bad_dimension, "one value per key field expected");
    BitKey key{0, width_};
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if ((values[i] & ~width_mask(fields_[i].width)) != 0) {
            throw Error(ErrorCode::bad_parameter, "value too wide for field " + fields_[i].name);
        }
        key.bits = fields_[i].width >= 64 ? values[i] : (key.bits << fields_[i].width) | values[i];
    }
    return key;
}

void write_table(std::ostream& out, const TernaryRuleTable& table) {
    const int digits = static_cast<int>((table.key_width() + 3) / 4);
    out << "TERNTBL v1 width=" << table.key_width() << " default=" << table.default_label() << '\n';
    const auto flags = out.flags();
    for (const auto& r : table.rules()) {
        out << "P " << std::dec << r.priority << " V 0x" << std::hex << std::setw(digits) << std::setfill('0')
            << r.value << " M 0x" << std::setw(digits) << r.mask << std::dec << " A " << r.label << '\n';
    }
    out.flags(flags);
}

TernaryRuleTable read_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw bad_table("empty input");
    std::istringstream header(line);
    std::string magic, version, width_tok, default_tok, extra;
    header >> magic >> version >> width_tok >> default_tok;
    if (magic != "TERNTBL" || version != "v1") throw bad_table("missing TERNTBL v1 header");
    if (header >> extra) throw bad_table("trailing header field");
    const auto width = parse_field<unsigned>(width_tok, "width=");
    const auto def = parse_field<std::uint32_t>(default_tok, "default=");

    std::vector<TernaryRule> rules;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string p, prio, v, value, m, mask, a, label;
        if (!(fields >> p >> prio >> v >> value >> m >> mask >> a >> label) || p != "P" || v != "V" || m != "M" ||
            a != "A" || (fields >> extra)) {
            throw bad_table("malformed rule '" + line + "'");
        }
        TernaryRule r;
        r.priority = parse_field<std::int64_t>(prio, "");
        r.value = parse_field<std::uint64_t>(value, "0x", 16);
        r.mask = parse_field<std::uint64_t>(mask, "0x", 16);
        r.label = parse_field<std::uint32_t>(label, "");
        rules.push_back(r);
    }
    try {
        return TernaryRuleTable(width, def, std::move(rules));
    } catch (const Error& e) {
        throw bad_table(e.what());
    }
}

}  // namespace flowcast::p4c
