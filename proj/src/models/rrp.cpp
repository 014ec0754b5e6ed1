#include "flowcast/models/rrp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowcast/error.hpp"
#include "flowcast/random.hpp"

namespace flowcast::models {
namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

class Builder {
public:
    Builder(const Rows& data, RrpTree& tree) : data_(data), tree_(tree), rng_(tree.seed) {}

    std::size_t build(const std::vector<std::size_t>& candidates) {
        const auto id = tree_.nodes.size();
        tree_.nodes.emplace_back();
        if (candidates.size() <= tree_.stop_depth) {
            std::vector<double> targets;
            targets.reserve(candidates.size());
            for (auto i : candidates) targets.push_back(data_[i][tree_.target_index]);
            tree_.nodes[id].leaf = true;
            tree_.nodes[id].median = median_of(std::move(targets));
            return id;
        }

        auto [east, west, east_items, west_items] = split(candidates);
        tree_.nodes[id].east_pivot = data_[east];
        tree_.nodes[id].west_pivot = data_[west];
        const auto east_child = build(east_items);
        const auto west_child = build(west_items);
        tree_.nodes[id].east_child = east_child;
        tree_.nodes[id].west_child = west_child;
        return id;
    }

private:
    struct Split {
        std::size_t east, west;
        std::vector<std::size_t> east_items, west_items;
    };

    std::size_t farthest(std::size_t pivot, const std::vector<std::size_t>& candidates) const {
        double max_distance = 0.0;
        std::size_t best = pivot;
        for (auto c : candidates) {
            const double d = euclidean(data_[pivot], data_[c]);
            if (d > max_distance) {
                max_distance = d;
                best = c;
            }
        }
        return best;
    }

    Split split(const std::vector<std::size_t>& candidates) {
        const auto pivot = candidates[rng_.index(candidates.size())];
        const auto east = farthest(pivot, candidates);
        const auto west = farthest(east, candidates);
        const double c = euclidean(data_[east], data_[west]);
        const auto mid = candidates.size() / 2;
        const auto middle = candidates.begin() + static_cast<std::ptrdiff_t>(mid);

        if (c == 0.0) return {east, west, {candidates.begin(), middle}, {middle, candidates.end()}};

        std::vector<std::pair<double, std::size_t>> projected;
        projected.reserve(candidates.size());
        for (auto i : candidates) {
            const double a = euclidean(data_[i], data_[west]);
            const double b = euclidean(data_[i], data_[east]);
            projected.emplace_back((a * a + c * c - b * b) / (2.0 * c), i);
        }
        std::stable_sort(projected.begin(), projected.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        Split out{east, west, {}, {}};
        out.east_items.reserve(mid);
        out.west_items.reserve(candidates.size() - mid);
        for (std::size_t i = 0; i < projected.size(); ++i) {
            (i < mid ? out.east_items : out.west_items).push_back(projected[i].second);
        }
        return out;
    }

    const Rows& data_;
    RrpTree& tree_;
    Rng rng_;
};

}  // namespace

double euclidean(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::size_t RrpTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf; }));
}

RrpTree rrp_fit(const Rows& data, std::size_t stop_depth, std::size_t target_index, std::uint64_t seed) {
    if (data.empty()) throw Error(ErrorCode::empty_input, "no rows to fit");
    if (stop_depth < 1) throw Error(ErrorCode::bad_parameter, "stop_depth must be at least 1");
    const auto columns = data.front().size();
    for (const auto& row : data) {
        if (row.size() != columns) throw Error(ErrorCode::bad_dimension, "ragged rows");
    }
    if (target_index >= columns) throw Error(ErrorCode::bad_parameter, "target index out of range");

    RrpTree tree;
    tree.columns = columns;
    tree.stop_depth = stop_depth;
    tree.target_index = target_index;
    tree.seed = seed;
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Builder(data, tree).build(all);
    return tree;
}

double rrp_predict(const RrpTree& tree, std::span<const double> row) {
    if (tree.nodes.empty()) throw Error(ErrorCode::unfitted, "empty rrp tree");
    if (row.size() != tree.columns) {
        throw Error(ErrorCode::bad_dimension, "row has " + std::to_string(row.size()) + " columns, tree expects " +
                                                  std::to_string(tree.columns));
    }
    std::size_t id = 0;
    while (!tree.nodes[id].leaf) {
        const auto& node = tree.nodes[id];
        id = euclidean(row, node.east_pivot) < euclidean(row, node.west_pivot) ? node.east_child : node.west_child;
    }
    return tree.nodes[id].median;
}

void RrpTree::write(ByteWriter& w) const {
    w.begin_section(tag("RRPT"));
    w.u64(columns);
    w.u64(stop_depth);
    w.u64(target_index);
    w.u64(seed);
    w.u64(nodes.size());
    for (const auto& n : nodes) {
        w.u8(n.leaf ? 1 : 0);
        if (n.leaf) {
            w.f64(n.median);
        } else {
            w.f64s(n.east_pivot);
            w.f64s(n.west_pivot);
            w.u64(n.east_child);
            w.u64(n.west_child);
        }
    }
    w.end_section();
}

RrpTree RrpTree::read(ByteReader& r) {
    auto s = r.section(tag("RRPT"));
    RrpTree t;
    t.columns = s.u64();
    t.stop_depth = s.u64();
    t.target_index = s.u64();
    t.seed = s.u64();
    const auto count = s.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        Node n;
        n.leaf = s.u8() != 0;
        if (n.leaf) {
            n.median = s.f64();
        } else {
            n.east_pivot = s.f64s();
            n.west_pivot = s.f64s();
            n.east_child = s.u64();
            n.west_child = s.u64();
            if (n.east_child >= count || n.west_child >= count) throw Error(ErrorCode::bad_format, "bad child index");
        }
        t.nodes.push_back(std::move(n));
    }
    return t;
}

}  // namespace flowcast::models
