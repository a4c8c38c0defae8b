#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "evoact/activation.hpp"
#include "evoact/rng.hpp"
#include "oracles.hpp"

using namespace evoact;

namespace {

ActivationTree fig1() { return binary(Primitive::max, unary(Primitive::relu, leaf()), unary(Primitive::swish, leaf())); }

ActivationTree x_minus_abs() { return binary(Primitive::sub, leaf(), unary(Primitive::abs, leaf())); }

} // namespace

TEST(Primitives, CountsAndArity)
{
    EXPECT_EQ(kUnaryPrimitives.size(), 14u);
    EXPECT_EQ(kBinaryPrimitives.size(), 5u);
    EXPECT_EQ(arity(Primitive::x), 0);
    for (auto p : kUnaryPrimitives) EXPECT_EQ(arity(p), 1) << name(p);
    for (auto p : kBinaryPrimitives) EXPECT_EQ(arity(p), 2) << name(p);
}

TEST(Primitives, NamesRoundTrip)
{
    for (auto p : kUnaryPrimitives) EXPECT_EQ(primitive_from_name(name(p)), p);
    for (auto p : kBinaryPrimitives) EXPECT_EQ(primitive_from_name(name(p)), p);
    EXPECT_EQ(primitive_from_name("x"), Primitive::x);
    EXPECT_FALSE(primitive_from_name("gelu").has_value());
}

TEST(Primitives, Semantics)
{
    using scalar::unary_value;
    EXPECT_EQ(unary_value(Primitive::relu, -3.0), 0.0);
    EXPECT_DOUBLE_EQ(unary_value(Primitive::elu, -1.0), std::exp(-1.0) - 1.0);
    EXPECT_DOUBLE_EQ(unary_value(Primitive::leaky_relu, -1.0), -0.2);
    EXPECT_DOUBLE_EQ(unary_value(Primitive::leaky_relu, 2.0), 2.0);
    EXPECT_DOUBLE_EQ(unary_value(Primitive::cos, 0.5), std::cos(0.5));
    EXPECT_DOUBLE_EQ(unary_value(Primitive::softplus, 0.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(unary_value(Primitive::softplus, 800.0), 800.0);
    EXPECT_NEAR(unary_value(Primitive::sigmoid, -800.0), 0.0, 1e-300);
    EXPECT_DOUBLE_EQ(unary_value(Primitive::erf, 0.5), std::erf(0.5));
    EXPECT_DOUBLE_EQ(scalar::binary_value(Primitive::sub, 1.0, 3.0), -2.0);
}

TEST(Eval, Examples)
{
    EXPECT_EQ(eval(unary(Primitive::relu, leaf()), -3.0), 0.0);
    EXPECT_EQ(eval(fig1(), 0.0), 0.0);
    EXPECT_EQ(eval(x_minus_abs(), -2.0), -4.0);
    EXPECT_NEAR(eval(unary(Primitive::swish, leaf()), 1.0), 0.7310585786300049, 1e-12);
}

TEST(EvalDual, Examples)
{
    const auto t = eval_dual(unary(Primitive::tanh, leaf()), 0.0);
    EXPECT_EQ(t.value, 0.0);
    EXPECT_EQ(t.derivative, 1.0);
    const auto r = eval_dual(unary(Primitive::relu, leaf()), -1.0);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.derivative, 0.0);
    const auto s = eval_dual(unary(Primitive::swish, leaf()), 0.0);
    EXPECT_EQ(s.value, 0.0);
    EXPECT_DOUBLE_EQ(s.derivative, 0.5);
}

TEST(EvalDual, KinkConventions)
{
    EXPECT_EQ(eval_dual(unary(Primitive::relu, leaf()), 0.0).derivative, 0.0);
    EXPECT_EQ(eval_dual(unary(Primitive::abs, leaf()), 0.0).derivative, 0.0);
    EXPECT_DOUBLE_EQ(eval_dual(unary(Primitive::leaky_relu, leaf()), 0.0).derivative, 0.2);
    // max(x, 2x) at 0 ties: take the left argument's derivative (1), not the right's (2).
    const auto twice = binary(Primitive::add, leaf(), leaf());
    EXPECT_EQ(eval_dual(binary(Primitive::max, leaf(), twice), 0.0).derivative, 1.0);
    EXPECT_EQ(eval_dual(binary(Primitive::min, twice, leaf()), 0.0).derivative, 2.0);
}

TEST(EvalDual, EveryPrimitiveMatchesCentralDifference)
{
    const std::vector<double> points{-2.3, -0.7, 0.4, 1.9};
    for (auto p : kUnaryPrimitives) {
        const auto t = unary(p, leaf());
        for (double x : points) EXPECT_LT(oracle::derivative_error(t, x), 1e-6) << name(p) << " at " << x;
    }
    for (auto p : kBinaryPrimitives) {
        const auto t = binary(p, unary(Primitive::sin, leaf()), unary(Primitive::tanh, leaf()));
        for (double x : points) EXPECT_LT(oracle::derivative_error(t, x), 1e-6) << name(p) << " at " << x;
    }
}

TEST(EvalDual, RandomTreeDerivativeOracle)
{
    Rng rng = derive(1, {{"derivative-oracle", 0}});
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        const auto tree = random_tree(rng, 1, 6);
        int points = 0;
        for (int attempt = 0; points < 20 && attempt < 2000; ++attempt) {
            const double x = rng.uniform(-5.0, 5.0);
            if (!oracle::safe_point(tree, x)) continue;
            ++points;
            ++checked;
            EXPECT_LT(oracle::derivative_error(tree, x), 1e-5) << to_string(tree) << " at x=" << x;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(EvalDual, ValueMatchesEvalBitForBit)
{
    Rng rng(77);
    for (int t = 0; t < 300; ++t) {
        const auto tree = random_tree(rng, 0, 6);
        const double x = rng.uniform(-5.0, 5.0);
        try {
            const double v = eval(tree, x);
            EXPECT_EQ(eval_dual(tree, x).value, v) << to_string(tree);
        } catch (const NonFinite&) {
        }
    }
}

TEST(Eval, NonFiniteIsReported)
{
    const auto c3 = unary(Primitive::cosh, unary(Primitive::cosh, unary(Primitive::cosh, leaf())));
    EXPECT_THROW((void)eval(c3, 100.0), NonFinite);
    EXPECT_THROW((void)eval_dual(c3, 100.0), NonFinite);
}

TEST(TreeKernel, MatchesScalarEvaluation)
{
    Rng rng(8);
    std::vector<double> xs;
    for (int i = 0; i < 64; ++i) xs.push_back(rng.uniform(-3.0, 3.0));
    for (int t = 0; t < 200; ++t) {
        const auto tree = random_tree(rng, 0, 5);
        TreeKernel kernel(tree);
        std::vector<double> value(xs.size()), deriv(xs.size());
        try {
            kernel(xs, value, deriv);
        } catch (const NonFinite&) {
            continue;
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto d = eval_dual(tree, xs[i]);
            ASSERT_EQ(value[i], d.value) << to_string(tree);
            ASSERT_EQ(deriv[i], d.derivative) << to_string(tree);
        }
    }
}

TEST(Tree, Depth)
{
    EXPECT_EQ(leaf().depth(), 0);
    EXPECT_EQ(unary(Primitive::relu, leaf()).depth(), 1);
    EXPECT_EQ(fig1().depth(), 2);
    const auto lopsided = binary(Primitive::add, leaf(), unary(Primitive::sin, unary(Primitive::cos, leaf())));
    EXPECT_EQ(lopsided.depth(), 3);
}

TEST(Tree, FromPrefixValidatesArity)
{
    EXPECT_THROW((void)ActivationTree::from_prefix({Primitive::add, Primitive::x}), std::invalid_argument);
    EXPECT_THROW((void)ActivationTree::from_prefix({Primitive::x, Primitive::x}), std::invalid_argument);
    EXPECT_THROW((void)ActivationTree::from_prefix({}), std::invalid_argument);
    EXPECT_EQ(ActivationTree::from_prefix({Primitive::relu, Primitive::x}), unary(Primitive::relu, leaf()));
}

TEST(Tree, SubtreeSurgery)
{
    const auto t = fig1();
    const auto kids = t.children(0);
    ASSERT_EQ(kids.size(), 2u);
    EXPECT_EQ(t.subtree(kids[1]), unary(Primitive::swish, leaf()));
    EXPECT_EQ(t.with_subtree(kids[0], leaf()), binary(Primitive::max, leaf(), unary(Primitive::swish, leaf())));
}

TEST(RandomTree, DepthBounds)
{
    Rng rng(5);
    for (int i = 0; i < 200; ++i) EXPECT_EQ(random_tree(rng, 1, 1).depth(), 1);
    for (int i = 0; i < 500; ++i) {
        const int d = random_tree(rng, 1, 4).depth();
        EXPECT_GE(d, 1);
        EXPECT_LE(d, 4);
    }
    EXPECT_TRUE(random_tree(rng, 0, 0).is_leaf());
}

TEST(Serialize, Examples)
{
    EXPECT_EQ(to_string(unary(Primitive::relu, leaf())), "(relu x)");
    EXPECT_EQ(to_string(leaf()), "x");
    EXPECT_EQ(parse_tree("(max (relu x) (swish x))"), fig1());
    EXPECT_EQ(parse_tree("  ( sub x\n(abs x) ) "), x_minus_abs());
}

TEST(Serialize, RoundTripRandomTrees)
{
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const auto t = random_tree(rng, 0, 8);
        ASSERT_EQ(parse_tree(to_string(t)), t) << to_string(t);
    }
}

TEST(Parse, ErrorsCarryPositionAndExpectation)
{
    try {
        (void)parse_tree("(relu");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
    }
    EXPECT_THROW((void)parse_tree("(relu x x)"), ParseError);
    EXPECT_THROW((void)parse_tree("(gelu x)"), ParseError);
    EXPECT_THROW((void)parse_tree("(add x)"), ParseError);
    EXPECT_THROW((void)parse_tree("x y"), ParseError);
    EXPECT_THROW((void)parse_tree(""), ParseError);
    try {
        (void)parse_tree("(add x )");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 7u);
    }
}
