#include <set>
#include <string>

#include <gtest/gtest.h>

#include "evoact/genome.hpp"

using namespace evoact;

namespace {

ActivationTree p(std::string_view s) { return parse_tree(s); }

// A chain of `depth` sin nodes over x.
ActivationTree chain(int depth)
{
    ActivationTree t = leaf();
    for (int i = 0; i < depth; ++i) t = unary(Primitive::sin, t);
    return t;
}

} // namespace

TEST(Crossover, SwapsInitGenes)
{
    Rng rng(1);
    const Chromosome a{p("(relu x)"), InitScheme::he_normal};
    const Chromosome b{p("(tanh (sin x))"), InitScheme::orthogonal};
    for (int i = 0; i < 50; ++i) {
        const auto [c1, c2] = crossover(a, b, rng);
        EXPECT_EQ(c1.init, InitScheme::orthogonal);
        EXPECT_EQ(c2.init, InitScheme::he_normal);
    }
}

TEST(Crossover, ExchangeOfLeftLevelOneSubtrees)
{
    // Swapping the left subtrees under the roots of g and f.
    const auto f = p("(mul (sigmoid (relu x)) (abs x))");
    const auto g = p("(max (tanh x) (swish x))");
    const auto [c1, c2] = exchange_subtrees(g, g.children(0)[0], f, f.children(0)[0]);
    EXPECT_EQ(c1, p("(max (sigmoid (relu x)) (swish x))"));
    EXPECT_EQ(c2, p("(mul (tanh x) (abs x))"));
}

TEST(Crossover, IdenticalParentsSamePointAreUnchanged)
{
    const auto t = p("(add (relu x) (cos (mul x x)))");
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto [a, b] = exchange_subtrees(t, i, t, i);
        EXPECT_EQ(a, t);
        EXPECT_EQ(b, t);
    }
}

TEST(Crossover, LeafPointFrequencyIsTenPercent)
{
    Rng rng(2);
    const auto t = p("(add (relu x) (cos (mul x x)))"); // 4 internal, 3 leaves
    int leaves = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) leaves += arity(t.nodes()[leaf_biased_point(t, rng)]) == 0;
    EXPECT_NEAR(leaves / double(n), 0.1, 0.005);
    EXPECT_EQ(leaf_biased_point(leaf(), rng), 0u);
}

TEST(Crossover, ChildrenAreValidTrees)
{
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const Chromosome a = random_chromosome(rng, 1, 4);
        const Chromosome b = random_chromosome(rng, 1, 4);
        const auto [c1, c2] = crossover(a, b, rng);
        EXPECT_NO_THROW((void)ActivationTree::from_prefix({c1.tree.nodes().begin(), c1.tree.nodes().end()}));
        EXPECT_NO_THROW((void)ActivationTree::from_prefix({c2.tree.nodes().begin(), c2.tree.nodes().end()}));
        EXPECT_EQ(c1.tree.size() + c2.tree.size(), a.tree.size() + b.tree.size());
    }
}

TEST(Shrink, ReluBecomesX)
{
    Rng rng(4);
    const Chromosome c{p("(relu x)"), InitScheme::he_uniform};
    const auto m = mutate_shrink(c, rng);
    EXPECT_EQ(m.tree, leaf());
    EXPECT_EQ(m.init, InitScheme::he_uniform);
}

TEST(Shrink, LeafUnchanged)
{
    Rng rng(5);
    const Chromosome c{leaf(), InitScheme::orthogonal};
    EXPECT_EQ(mutate_shrink(c, rng), c);
}

TEST(Shrink, MinimumReplacedBySwishIsReachable)
{
    const auto f1 = p("(add (min (swish x) (cos x)) (tanh x))");
    const auto f2 = p("(add (swish x) (tanh x))");
    std::set<std::string> outcomes;
    for (std::uint64_t s = 0; s < 400; ++s) {
        Rng rng(s);
        const auto m = mutate_shrink({f1, InitScheme::glorot_uniform}, rng);
        EXPECT_LT(m.tree.size(), f1.size());
        outcomes.insert(to_string(m.tree));
    }
    EXPECT_TRUE(outcomes.count(to_string(f2)));
    EXPECT_LE(outcomes.size(), 7u);
}

TEST(Shrink, StrictlyReducesNodeCount)
{
    Rng rng(6);
    for (int i = 0; i < 5000; ++i) {
        const auto c = random_chromosome(rng, 1, 6);
        EXPECT_LT(mutate_shrink(c, rng).tree.size(), c.tree.size());
    }
}

TEST(BloatControl, Boundaries)
{
    Rng rng(7);
    const Chromosome pa{p("(relu x)"), InitScheme::he_normal};
    const Chromosome pb{p("(tanh x)"), InitScheme::lecun_normal};
    const std::pair<const Chromosome&, const Chromosome&> parents{pa, pb};

    const Chromosome at_limit{chain(10), InitScheme::orthogonal};
    EXPECT_EQ(bloat_control(at_limit, parents, rng), at_limit);
    const Chromosome tiny{leaf(), InitScheme::orthogonal};
    EXPECT_EQ(bloat_control(tiny, parents, rng), tiny);

    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) {
        const auto r = bloat_control({chain(11), InitScheme::orthogonal}, parents, rng);
        EXPECT_TRUE(r.tree == pa.tree || r.tree == pb.tree);
        EXPECT_EQ(r.init, InitScheme::orthogonal);
        seen.insert(to_string(r.tree));
    }
    EXPECT_EQ(seen.size(), 2u);
}

TEST(Chromosome, TextRoundTrip)
{
    Rng rng(8);
    for (int i = 0; i < 300; ++i) {
        const auto c = random_chromosome(rng, 0, 6);
        EXPECT_EQ(parse_chromosome(to_string(c)), c);
    }
    EXPECT_EQ(to_string(Chromosome{p("(relu x)"), InitScheme::he_normal}), "{tree = \"(relu x)\", init = \"he_normal\"}");
    EXPECT_THROW((void)parse_chromosome("{tree = \"(relu x)\", init = \"nope\"}"), UnknownScheme);
    EXPECT_THROW((void)parse_chromosome("{tree = \"(relu x\", init = \"he_normal\"}"), ParseError);
}
