#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "flowcast/models/serialize.hpp"

namespace flowcast::models {

/// Fixed-width bit string; bit 0 is the most significant of `width` bits.
struct BitKey {
    std::uint64_t bits = 0;
    unsigned width = 0;

    bool bit(unsigned index) const { return ((bits >> (width - 1 - index)) & 1U) != 0; }
};

struct BdtParams {
    std::size_t max_depth = 8;
    std::size_t min_leaf = 1;
    std::size_t n_labels = 8;
};

/**
 * @brief Decision tree whose tests read single key bits.
 *
 * Internal nodes send keys with the tested bit clear to `left` and set to
 * `right`. Leaves carry a label (quantile bucket of the leaf median) and the
 * median itself. Node 0 is the root.
 */
struct BitDecisionTree {
    struct Node {
        bool leaf = true;
        unsigned bit = 0;
        std::size_t left = 0;
        std::size_t right = 0;
        std::uint32_t label = 0;
        double median = 0.0;

        bool operator==(const Node&) const = default;
    };

    unsigned key_width = 0;
    std::size_t n_labels = 0;
    std::vector<Node> nodes;
    std::vector<double> label_values;  ///< representative target value per label
    std::vector<double> label_edges;   ///< n_labels - 1 quantile cut points

    std::size_t depth() const;
    std::size_t leaf_count() const;

    /// Structural checks: child indices in range, no bit tested twice on a path.
    void validate() const;

    void write(ByteWriter& w) const;
    static BitDecisionTree read(ByteReader& r);
};

/**
 * Greedy top-down fit. Each node takes the unused bit with the largest
 * reduction in squared error; near-equal candidates are ordered by the best
 * reduction their children could then reach, then by bit index. Growth stops
 * at max_depth, when a split would leave fewer than min_leaf rows on a side,
 * or when the targets are constant.
 */
BitDecisionTree bdt_fit(std::span<const std::uint64_t> keys, std::span<const double> targets, unsigned key_width,
                        const BdtParams& params);

std::uint32_t bdt_predict(const BitDecisionTree& tree, BitKey key);

/// Median of the leaf reached by `key`, before quantisation to a label.
double bdt_leaf_median(const BitDecisionTree& tree, BitKey key);

/**
 * Text form read by the table compiler:
 *
 *     BDT width=<w> labels=<n>
 *     N <id> bit=<b> L=<id> R=<id>
 *     L <id> label=<k>
 */
void write_tree_text(std::ostream& out, const BitDecisionTree& tree);
BitDecisionTree read_tree_text(std::istream& in);

}  // namespace flowcast::models
