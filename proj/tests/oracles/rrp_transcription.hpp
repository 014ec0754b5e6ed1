#pragma once

// Second, deliberately literal implementation of the random projection
// regression listing. It copies rows around the way the listing's arrays do
// and shares nothing with the library except the seeded generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "flowcast/random.hpp"

namespace oracle {

using Row = std::vector<double>;

struct RrpNode {
    bool is_leaf = false;
    double median = 0.0;
    Row east_pivot, west_pivot;
    std::unique_ptr<RrpNode> east_child, west_child;
};

class RandomProjectionRegression {
public:
    RandomProjectionRegression(std::vector<Row> data, std::size_t stop_depth, std::size_t target_index,
                               std::uint64_t seed)
        : stop_depth_(stop_depth), target_index_(target_index), random_(seed) {
        tree = BuildTree(std::move(data), stop_depth_);
    }

    double LocalizeAndPredict(const Row& data_point) const { return LocalizeAndPredict(data_point, *tree); }

    std::unique_ptr<RrpNode> tree;

private:
    std::unique_ptr<RrpNode> BuildTree(std::vector<Row> candidates, std::size_t enough) {
        auto node = std::make_unique<RrpNode>();
        if (candidates.size() <= enough) {
            std::vector<double> column;
            for (const auto& c : candidates) column.push_back(c[target_index_]);
            node->is_leaf = true;
            node->median = calculate_median(column);
            return node;
        }
        Row east_pivot, west_pivot;
        std::vector<Row> east_items, west_items;
        Split(candidates, east_pivot, west_pivot, east_items, west_items);
        node->east_pivot = east_pivot;
        node->west_pivot = west_pivot;
        node->east_child = BuildTree(east_items, enough);
        node->west_child = BuildTree(west_items, enough);
        return node;
    }

    void Split(const std::vector<Row>& candidates, Row& east_pivot, Row& west_pivot, std::vector<Row>& east_items,
               std::vector<Row>& west_items) {
        const Row pivot = candidates[random_.index(candidates.size())];
        east_pivot = FindFarest(pivot, candidates);
        west_pivot = FindFarest(east_pivot, candidates);
        const double distance_c = CalculateDistance(east_pivot, west_pivot);

        if (distance_c == 0) {
            const std::size_t mid_point = candidates.size() / 2;
            east_items.assign(candidates.begin(), candidates.begin() + static_cast<long>(mid_point));
            west_items.assign(candidates.begin() + static_cast<long>(mid_point), candidates.end());
            return;
        }

        std::vector<std::pair<double, Row>> all_distance;
        for (const auto& candidate : candidates) {
            const double distance_a = CalculateProjectionDistance(candidate, west_pivot, east_pivot, distance_c);
            all_distance.emplace_back(distance_a, candidate);
        }
        std::stable_sort(all_distance.begin(), all_distance.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        const std::size_t mid_point = all_distance.size() / 2;
        for (std::size_t i = 0; i < all_distance.size(); ++i) {
            if (i < mid_point) {
                east_items.push_back(all_distance[i].second);
            } else {
                west_items.push_back(all_distance[i].second);
            }
        }
    }

    double LocalizeAndPredict(const Row& data_point, const RrpNode& node) const {
        if (node.is_leaf) return node.median;
        if (CalculateDistance(data_point, node.east_pivot) < CalculateDistance(data_point, node.west_pivot)) {
            return LocalizeAndPredict(data_point, *node.east_child);
        }
        return LocalizeAndPredict(data_point, *node.west_child);
    }

    static Row FindFarest(const Row& pivot, const std::vector<Row>& candidates) {
        double max_distance = 0;
        Row farest_point = pivot;
        for (const auto& candidate : candidates) {
            const double distance = CalculateDistance(pivot, candidate);
            if (distance > max_distance) {
                max_distance = distance;
                farest_point = candidate;
            }
        }
        return farest_point;
    }

    static double CalculateDistance(const Row& p1, const Row& p2) {
        double sum = 0;
        for (std::size_t i = 0; i < p1.size() && i < p2.size(); ++i) sum += (p1[i] - p2[i]) * (p1[i] - p2[i]);
        return std::sqrt(sum);
    }

    static double CalculateProjectionDistance(const Row& candidate, const Row& west_pivot, const Row& east_pivot,
                                              double c) {
        const double distance_a = CalculateDistance(candidate, west_pivot);
        const double distance_b = CalculateDistance(candidate, east_pivot);
        return (distance_a * distance_a + c * c - distance_b * distance_b) / (2 * c);
    }

    static double calculate_median(std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
    }

    std::size_t stop_depth_;
    std::size_t target_index_;
    flowcast::Rng random_;
};

/// Pre-order (node, east, west) flattening, the order the library stores nodes in.
inline void flatten(const RrpNode& node, std::vector<const RrpNode*>& out) {
    out.push_back(&node);
    if (node.is_leaf) return;
    flatten(*node.east_child, out);
    flatten(*node.west_child, out);
}

}  // namespace oracle
