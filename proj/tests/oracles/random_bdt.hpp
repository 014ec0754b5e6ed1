#pragma once

// Random bit decision trees for the compiler property checks.

#include <cstdint>
#include <vector>

#include "flowcast/models/bdt.hpp"
#include "flowcast/random.hpp"

namespace oracle {

/// Grows a random tree of the given width; each node splits with probability
/// `split_p` while below `max_depth`, on a bit not yet used on its path.
inline flowcast::models::BitDecisionTree random_tree(unsigned width, std::size_t max_depth, std::uint64_t seed,
                                                     double split_p = 0.7, std::uint32_t n_labels = 8) {
    using Tree = flowcast::models::BitDecisionTree;
    flowcast::Rng rng(seed);
    Tree tree;
    tree.key_width = width;
    tree.n_labels = n_labels;
    struct Item {
        std::size_t id;
        std::size_t depth;
        std::vector<bool> used;
    };
    tree.nodes.emplace_back();
    std::vector<Item> stack{{0, 0, std::vector<bool>(width, false)}};
    while (!stack.empty()) {
        auto item = stack.back();
        stack.pop_back();
        if (item.depth < max_depth && item.depth < width && rng.uniform01() < split_p) {
            std::vector<unsigned> free;
            for (unsigned b = 0; b < width; ++b) {
                if (!item.used[b]) free.push_back(b);
            }
            const unsigned bit = free[rng.index(free.size())];
            const auto left = tree.nodes.size();
            tree.nodes.emplace_back();
            const auto right = tree.nodes.size();
            tree.nodes.emplace_back();
            auto& n = tree.nodes[item.id];
            n.leaf = false;
            n.bit = bit;
            n.left = left;
            n.right = right;
            item.used[bit] = true;
            stack.push_back({right, item.depth + 1, item.used});
            stack.push_back({left, item.depth + 1, item.used});
        } else {
            auto& n = tree.nodes[item.id];
            n.leaf = true;
            n.label = static_cast<std::uint32_t>(rng.index(n_labels));
        }
    }
    tree.label_values.resize(n_labels);
    for (std::uint32_t k = 0; k < n_labels; ++k) tree.label_values[k] = k;
    return tree;
}

/// Reference descent written independently of bdt_predict.
inline std::uint32_t walk(const flowcast::models::BitDecisionTree& tree, std::uint64_t key) {
    std::size_t id = 0;
    while (!tree.nodes[id].leaf) {
        const auto& n = tree.nodes[id];
        const bool set = (key >> (tree.key_width - 1 - n.bit)) & 1U;
        id = set ? n.right : n.left;
    }
    return tree.nodes[id].label;
}

}  // namespace oracle
