#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowcast/models/serialize.hpp"

namespace flowcast::models {

/// Row-major sample matrix: every row has the same number of columns.
using Rows = std::vector<std::vector<double>>;

/**
 * @brief Recursive random projection regression tree.
 *
 * Nodes are stored in build order (a node, then its whole east subtree, then
 * its west subtree), so index 0 is the root.
 */
struct RrpTree {
    struct Node {
        bool leaf = false;
        double median = 0.0;              // leaves
        std::vector<double> east_pivot;   // internal nodes
        std::vector<double> west_pivot;
        std::size_t east_child = 0;
        std::size_t west_child = 0;

        bool operator==(const Node&) const = default;
    };

    std::vector<Node> nodes;
    std::size_t columns = 0;
    std::size_t stop_depth = 0;
    std::size_t target_index = 0;
    std::uint64_t seed = 0;

    std::size_t leaf_count() const;

    void write(ByteWriter& w) const;
    static RrpTree read(ByteReader& r);
};

/**
 * Builds the tree. A set of at most `stop_depth` rows becomes a leaf holding
 * the median of its target column. Otherwise a random row is drawn, the row
 * farthest from it becomes the east pivot and the row farthest from that the
 * west pivot. Rows are ordered by their projection onto the west-to-east
 * axis; the first half goes to the east child and the rest to the west child.
 * Coincident pivots fall back to splitting the rows in their current order.
 */
RrpTree rrp_fit(const Rows& data, std::size_t stop_depth, std::size_t target_index, std::uint64_t seed);

/// Descends toward the nearer pivot (east on strict <) and returns the leaf median.
double rrp_predict(const RrpTree& tree, std::span<const double> row);

double euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace flowcast::models
