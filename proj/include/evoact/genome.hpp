#pragma once

// The <activation tree, weight-init scheme> chromosome and its variation operators.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evoact/activation.hpp"
#include "evoact/error.hpp"
#include "evoact/rng.hpp"
#include "evoact/weight_init.hpp"

namespace evoact {

inline constexpr int kMaxTreeDepth = 10;
inline constexpr double kLeafCrossoverProbability = 0.1;

struct Chromosome {
    ActivationTree tree;
    InitScheme init = InitScheme::glorot_uniform;

    friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

[[nodiscard]] inline Chromosome random_chromosome(Rng& rng, int min_depth, int max_depth)
{
    Chromosome c;
    c.tree = random_tree(rng, min_depth, max_depth);
    c.init = kInitSchemes[rng.below(kInitSchemes.size())];
    return c;
}

// Crossover point: a uniformly chosen leaf with probability 0.1, else a uniformly chosen
// internal node. Trees without internal nodes always give a leaf.
[[nodiscard]] inline std::size_t leaf_biased_point(const ActivationTree& tree, Rng& rng)
{
    std::vector<std::size_t> leaves;
    std::vector<std::size_t> internal;
    const auto nodes = tree.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) (arity(nodes[i]) == 0 ? leaves : internal).push_back(i);
    const bool pick_leaf = internal.empty() || rng.bernoulli(kLeafCrossoverProbability);
    const auto& pool = pick_leaf ? leaves : internal;
    return pool[rng.below(pool.size())];
}

// Subtree exchange at the given points.
[[nodiscard]] inline std::pair<ActivationTree, ActivationTree> exchange_subtrees(const ActivationTree& a, std::size_t at_a,
                                                                                 const ActivationTree& b, std::size_t at_b)
{
    return {a.with_subtree(at_a, b.subtree(at_b)), b.with_subtree(at_b, a.subtree(at_a))};
}

// Replaces an over-deep child tree with the tree of a uniformly chosen parent; the w gene stays.
[[nodiscard]] inline Chromosome bloat_control(Chromosome child, const std::pair<const Chromosome&, const Chromosome&>& parents, Rng& rng,
                                              int max_depth = kMaxTreeDepth)
{
    if (child.tree.depth() <= max_depth) return child;
    child.tree = rng.below(2) == 0 ? parents.first.tree : parents.second.tree;
    return child;
}

// Swaps w genes (c1 gets p2.w), exchanges one leaf-biased subtree per parent, then
// applies bloat control against the two parents.
[[nodiscard]] inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng,
                                                                 int max_depth = kMaxTreeDepth)
{
    const std::size_t at1 = leaf_biased_point(p1.tree, rng);
    const std::size_t at2 = leaf_biased_point(p2.tree, rng);
    auto [t1, t2] = exchange_subtrees(p1.tree, at1, p2.tree, at2);
    Chromosome c1{std::move(t1), p2.init};
    Chromosome c2{std::move(t2), p1.init};
    const std::pair<const Chromosome&, const Chromosome&> parents{p1, p2};
    c1 = bloat_control(std::move(c1), parents, rng, max_depth);
    c2 = bloat_control(std::move(c2), parents, rng, max_depth);
    return {std::move(c1), std::move(c2)};
}

// Shrink mutation: a uniformly chosen internal node is replaced by one of its
// children's subtrees. Lone leaves come back unchanged.
[[nodiscard]] inline Chromosome mutate_shrink(Chromosome c, Rng& rng)
{
    std::vector<std::size_t> internal;
    const auto nodes = c.tree.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (arity(nodes[i]) > 0) internal.push_back(i);
    }
    if (internal.empty()) return c;
    const std::size_t at = internal[rng.below(internal.size())];
    const auto kids = c.tree.children(at);
    const std::size_t pick = kids[rng.below(kids.size())];
    c.tree = c.tree.with_subtree(at, c.tree.subtree(pick));
    return c;
}

// `{tree = "(relu x)", init = "he_normal"}`
[[nodiscard]] inline std::string to_string(const Chromosome& c)
{
    return "{tree = \"" + to_string(c.tree) + "\", init = \"" + std::string(name(c.init)) + "\"}";
}

[[nodiscard]] inline Chromosome parse_chromosome(std::string_view text)
{
    auto quoted_after = [&](std::string_view key) -> std::string_view {
        const auto k = text.find(key);
        if (k == std::string_view::npos) throw ParseError(0, std::string(key), "no such key");
        auto open = text.find('"', k);
        if (open == std::string_view::npos) throw ParseError(k, "'\"'", "end of input");
        auto close = text.find('"', open + 1);
        if (close == std::string_view::npos) throw ParseError(open + 1, "closing '\"'", "end of input");
        return text.substr(open + 1, close - open - 1);
    };
    Chromosome c;
    c.tree = parse_tree(quoted_after("tree"));
    c.init = init_scheme_from_name(quoted_after("init"));
    return c;
}

} // namespace evoact
