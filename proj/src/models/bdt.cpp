#include "flowcast/models/bdt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "flowcast/error.hpp"

namespace flowcast::models {
namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::uint32_t bucket_of(const std::vector<double>& edges, double value) {
    return static_cast<std::uint32_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

struct Moments {
    double n = 0, sum = 0, sumsq = 0;

    void add(double v) {
        n += 1;
        sum += v;
        sumsq += v * v;
    }
    double sse() const { return n > 0 ? std::max(0.0, sumsq - sum * sum / n) : 0.0; }
};

class Fitter {
public:
    Fitter(std::span<const std::uint64_t> keys, std::span<const double> targets, unsigned width,
           const BdtParams& params, BitDecisionTree& tree)
        : keys_(keys), targets_(targets), width_(width), params_(params), tree_(tree) {}

    std::size_t build(const std::vector<std::size_t>& rows, std::size_t depth, std::uint64_t used) {
        const auto id = tree_.nodes.size();
        tree_.nodes.emplace_back();

        std::optional<unsigned> bit;
        if (depth < params_.max_depth && !constant(rows)) bit = choose_bit(rows, used);
        if (!bit) {
            std::vector<double> values;
            values.reserve(rows.size());
            for (auto r : rows) values.push_back(targets_[r]);
            auto& leaf = tree_.nodes[id];
            leaf.leaf = true;
            leaf.median = median_of(std::move(values));
            leaf.label = bucket_of(tree_.label_edges, leaf.median);
            return id;
        }

        std::vector<std::size_t> zeros, ones;
        partition(rows, *bit, zeros, ones);
        const auto mask = used | (std::uint64_t{1} << *bit);
        const auto left = build(zeros, depth + 1, mask);
        const auto right = build(ones, depth + 1, mask);
        auto& node = tree_.nodes[id];
        node.leaf = false;
        node.bit = *bit;
        node.left = left;
        node.right = right;
        return id;
    }

private:
    bool test(std::size_t row, unsigned bit) const { return ((keys_[row] >> (width_ - 1 - bit)) & 1U) != 0; }

    bool constant(const std::vector<std::size_t>& rows) const {
        for (auto r : rows) {
            if (targets_[r] != targets_[rows.front()]) return false;
        }
        return true;
    }

    void partition(const std::vector<std::size_t>& rows, unsigned bit, std::vector<std::size_t>& zeros,
                   std::vector<std::size_t>& ones) const {
        for (auto r : rows) (test(r, bit) ? ones : zeros).push_back(r);
    }

    // Gain of splitting `rows` on `bit`, or nothing when a side is too small.
    std::optional<double> gain(const std::vector<std::size_t>& rows, unsigned bit, double parent_sse) const {
        Moments zero, one;
        for (auto r : rows) (test(r, bit) ? one : zero).add(targets_[r]);
        const auto min_leaf = static_cast<double>(params_.min_leaf);
        if (zero.n < min_leaf || one.n < min_leaf) return std::nullopt;
        return std::max(0.0, parent_sse - zero.sse() - one.sse());
    }

    double sse(const std::vector<std::size_t>& rows) const {
        Moments m;
        for (auto r : rows) m.add(targets_[r]);
        return m.sse();
    }

    double best_gain(const std::vector<std::size_t>& rows, std::uint64_t used) const {
        if (rows.empty() || constant(rows)) return 0.0;
        const double parent = sse(rows);
        double best = 0.0;
        for (unsigned b = 0; b < width_; ++b) {
            if (used & (std::uint64_t{1} << b)) continue;
            if (auto g = gain(rows, b, parent)) best = std::max(best, *g);
        }
        return best;
    }

    std::optional<unsigned> choose_bit(const std::vector<std::size_t>& rows, std::uint64_t used) const {
        const double parent = sse(rows);
        const double tolerance = 1e-9 * parent;
        std::vector<std::pair<unsigned, double>> valid;
        double best = -1.0;
        for (unsigned b = 0; b < width_; ++b) {
            if (used & (std::uint64_t{1} << b)) continue;
            if (auto g = gain(rows, b, parent)) {
                valid.emplace_back(b, *g);
                best = std::max(best, *g);
            }
        }
        if (valid.empty()) return std::nullopt;

        std::vector<unsigned> tied;
        for (auto [b, g] : valid) {
            if (g >= best - tolerance) tied.push_back(b);
        }
        if (tied.size() == 1) return tied.front();

        // One level of lookahead separates bits that only pay off together (xor-like targets).
        unsigned choice = tied.front();
        double best_ahead = -1.0;
        for (auto b : tied) {
            std::vector<std::size_t> zeros, ones;
            partition(rows, b, zeros, ones);
            const auto mask = used | (std::uint64_t{1} << b);
            const double ahead = best_gain(zeros, mask) + best_gain(ones, mask);
            if (ahead > best_ahead + tolerance) {
                best_ahead = ahead;
                choice = b;
            }
        }
        return choice;
    }

    std::span<const std::uint64_t> keys_;
    std::span<const double> targets_;
    unsigned width_;
    BdtParams params_;
    BitDecisionTree& tree_;
};

const BitDecisionTree::Node& descend(const BitDecisionTree& tree, BitKey key) {
    if (tree.nodes.empty()) throw Error(ErrorCode::unfitted, "empty decision tree");
    if (key.width != tree.key_width) {
        throw Error(ErrorCode::bad_dimension, "key width " + std::to_string(key.width) + " does not match tree width " +
                                                  std::to_string(tree.key_width));
    }
    const auto* node = &tree.nodes.front();
    while (!node->leaf) node = &tree.nodes[key.bit(node->bit) ? node->right : node->left];
    return *node;
}

}  // namespace

std::size_t BitDecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::function<std::size_t(std::size_t)> walk = [&](std::size_t id) -> std::size_t {
        const auto& n = nodes[id];
        return n.leaf ? 0 : 1 + std::max(walk(n.left), walk(n.right));
    };
    return walk(0);
}

std::size_t BitDecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf; }));
}

void BitDecisionTree::validate() const {
    if (nodes.empty()) throw Error(ErrorCode::bad_format, "tree has no nodes");
    if (key_width == 0 || key_width > 64) throw Error(ErrorCode::bad_format, "key width must lie in [1, 64]");
    std::vector<bool> seen(nodes.size(), false);
    std::function<void(std::size_t, std::uint64_t)> walk = [&](std::size_t id, std::uint64_t used) {
        if (id >= nodes.size()) throw Error(ErrorCode::bad_format, "child index out of range");
        if (seen[id]) throw Error(ErrorCode::bad_format, "node reached twice");
        seen[id] = true;
        const auto& n = nodes[id];
        if (n.leaf) return;
        if (n.bit >= key_width) throw Error(ErrorCode::bad_format, "tested bit outside key");
        const auto mask = std::uint64_t{1} << n.bit;
        if (used & mask) throw Error(ErrorCode::bad_format, "bit " + std::to_string(n.bit) + " tested twice on a path");
        walk(n.left, used | mask);
        walk(n.right, used | mask);
    };
    walk(0, 0);
}

BitDecisionTree bdt_fit(std::span<const std::uint64_t> keys, std::span<const double> targets, unsigned key_width,
                        const BdtParams& params) {
    if (keys.empty()) throw Error(ErrorCode::empty_input, "no training keys");
    if (keys.size() != targets.size()) throw Error(ErrorCode::bad_dimension, "keys and targets differ in length");
    if (key_width == 0 || key_width > 64) throw Error(ErrorCode::bad_parameter, "key width must lie in [1, 64]");
    if (params.n_labels < 2) throw Error(ErrorCode::bad_parameter, "need at least two labels");
    if (params.min_leaf < 1) throw Error(ErrorCode::bad_parameter, "min_leaf must be at least 1");
    if (key_width < 64) {
        for (auto k : keys) {
            if (k >> key_width) throw Error(ErrorCode::bad_dimension, "key wider than key_width");
        }
    }

    BitDecisionTree tree;
    tree.key_width = key_width;
    tree.n_labels = params.n_labels;

    std::vector<double> sorted(targets.begin(), targets.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 1; j < params.n_labels; ++j) {
        tree.label_edges.push_back(quantile(sorted, static_cast<double>(j) / static_cast<double>(params.n_labels)));
    }
    std::vector<double> sum(params.n_labels, 0.0);
    std::vector<std::size_t> count(params.n_labels, 0);
    for (double t : targets) {
        const auto b = bucket_of(tree.label_edges, t);
        sum[b] += t;
        ++count[b];
    }
    tree.label_values.resize(params.n_labels);
    for (std::size_t j = 0; j < params.n_labels; ++j) {
        if (count[j] > 0) {
            tree.label_values[j] = sum[j] / static_cast<double>(count[j]);
        } else {
            // Empty bucket: nearest edge stands in.
            tree.label_values[j] = tree.label_edges[std::min(j, tree.label_edges.size() - 1)];
        }
    }

    std::vector<std::size_t> rows(keys.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Fitter(keys, targets, key_width, params, tree).build(rows, 0, 0);
    return tree;
}

std::uint32_t bdt_predict(const BitDecisionTree& tree, BitKey key) { return descend(tree, key).label; }

double bdt_leaf_median(const BitDecisionTree& tree, BitKey key) { return descend(tree, key).median; }

void BitDecisionTree::write(ByteWriter& w) const {
    w.begin_section(tag("BDTS"));
    w.u32(key_width);
    w.u64(n_labels);
    w.f64s(label_values);
    w.f64s(label_edges);
    w.u64(nodes.size());
    for (const auto& n : nodes) {
        w.u8(n.leaf ? 1 : 0);
        if (n.leaf) {
            w.u32(n.label);
            w.f64(n.median);
        } else {
            w.u32(n.bit);
            w.u64(n.left);
            w.u64(n.right);
        }
    }
    w.end_section();
}

BitDecisionTree BitDecisionTree::read(ByteReader& r) {
    auto s = r.section(tag("BDTS"));
    BitDecisionTree t;
    t.key_width = s.u32();
    t.n_labels = s.u64();
    t.label_values = s.f64s();
    t.label_edges = s.f64s();
    const auto count = s.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        BitDecisionTree::Node n;
        n.leaf = s.u8() != 0;
        if (n.leaf) {
            n.label = s.u32();
            n.median = s.f64();
        } else {
            n.bit = s.u32();
            n.left = s.u64();
            n.right = s.u64();
        }
        t.nodes.push_back(n);
    }
    t.validate();
    return t;
}

void write_tree_text(std::ostream& out, const BitDecisionTree& tree) {
    out << "BDT width=" << tree.key_width << " labels=" << tree.n_labels << '\n';
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const auto& n = tree.nodes[id];
        if (n.leaf) {
            out << "L " << id << " label=" << n.label << '\n';
        } else {
            out << "N " << id << " bit=" << n.bit << " L=" << n.left << " R=" << n.right << '\n';
        }
    }
}

BitDecisionTree read_tree_text(std::istream& in) {
    auto bad = [](const std::string& what) { return Error(ErrorCode::bad_format, "tree text: " + what); };
    auto value_after = [&](const std::string& token, const std::string& prefix) -> unsigned long long {
        if (token.rfind(prefix, 0) != 0) throw bad("expected " + prefix);
        try {
            std::size_t used = 0;
            const auto v = std::stoull(token.substr(prefix.size()), &used);
            if (used != token.size() - prefix.size()) throw bad("bad number in " + token);
            return v;
        } catch (const std::logic_error&) {
            throw bad("bad number in " + token);
        }
    };

    std::string line;
    if (!std::getline(in, line)) throw bad("empty input");
    std::istringstream header(line);
    std::string magic, width_token, labels_token;
    header >> magic >> width_token >> labels_token;
    if (magic != "BDT") throw bad("missing BDT header");

    BitDecisionTree tree;
    tree.key_width = static_cast<unsigned>(value_after(width_token, "width="));
    tree.n_labels = static_cast<std::size_t>(value_after(labels_token, "labels="));

    std::map<std::size_t, BitDecisionTree::Node> by_id;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string kind;
        std::size_t id = 0;
        if (!(fields >> kind >> id)) throw bad("malformed line: " + line);
        BitDecisionTree::Node n;
        std::string a, b, c;
        if (kind == "L") {
            fields >> a;
            n.leaf = true;
            n.label = static_cast<std::uint32_t>(value_after(a, "label="));
        } else if (kind == "N") {
            fields >> a >> b >> c;
            n.leaf = false;
            n.bit = static_cast<unsigned>(value_after(a, "bit="));
            n.left = static_cast<std::size_t>(value_after(b, "L="));
            n.right = static_cast<std::size_t>(value_after(c, "R="));
        } else {
            throw bad("unknown record " + kind);
        }
        if (!by_id.emplace(id, n).second) throw bad("duplicate node id " + std::to_string(id));
    }
    for (std::size_t i = 0; i < by_id.size(); ++i) {
        auto it = by_id.find(i);
        if (it == by_id.end()) throw bad("node ids must be 0..n-1");
        tree.nodes.push_back(it->second);
    }
    tree.validate();
    return tree;
}

}  // namespace flowcast::models
