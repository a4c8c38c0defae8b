#pragma once

// Activation functions as expression trees over the scalar input x.
//
// A tree is stored as its prefix (pre-order) node sequence, so a subtree is a
// contiguous slice and structural equality is plain sequence equality.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evoact/error.hpp"
#include "evoact/rng.hpp"

namespace evoact {

enum class Primitive : std::uint8_t {
    x,
    // unary
    relu,
    elu,
    sigmoid,
    tanh,
    swish,
    sin,
    cos,
    atan,
    sinh,
    cosh,
    leaky_relu,
    softplus,
    erf,
    abs,
    // binary
    add,
    sub,
    mul,
    max,
    min,
};

inline constexpr std::array<Primitive, 14> kUnaryPrimitives{
    Primitive::relu, Primitive::elu,  Primitive::sigmoid, Primitive::tanh,       Primitive::swish,
    Primitive::sin,  Primitive::cos,  Primitive::atan,    Primitive::sinh,       Primitive::cosh,
    Primitive::leaky_relu, Primitive::softplus, Primitive::erf, Primitive::abs,
};

inline constexpr std::array<Primitive, 5> kBinaryPrimitives{
    Primitive::add, Primitive::sub, Primitive::mul, Primitive::max, Primitive::min,
};

inline constexpr double kLeakyReluSlope = 0.2;
inline constexpr double kSeluScale = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

[[nodiscard]] constexpr int arity(Primitive p) noexcept
{
    if (p == Primitive::x) return 0;
    if (p >= Primitive::add) return 2;
    return 1;
}

[[nodiscard]] constexpr std::string_view name(Primitive p) noexcept
{
    switch (p) {
    case Primitive::x: return "x";
    case Primitive::relu: return "relu";
    case Primitive::elu: return "elu";
    case Primitive::sigmoid: return "sigmoid";
    case Primitive::tanh: return "tanh";
    case Primitive::swish: return "swish";
    case Primitive::sin: return "sin";
    case Primitive::cos: return "cos";
    case Primitive::atan: return "atan";
    case Primitive::sinh: return "sinh";
    case Primitive::cosh: return "cosh";
    case Primitive::leaky_relu: return "leaky_relu";
    case Primitive::softplus: return "softplus";
    case Primitive::erf: return "erf";
    case Primitive::abs: return "abs";
    case Primitive::add: return "add";
    case Primitive::sub: return "sub";
    case Primitive::mul: return "mul";
    case Primitive::max: return "max";
    case Primitive::min: return "min";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Primitive> primitive_from_name(std::string_view s) noexcept
{
    for (int i = 0; i <= static_cast<int>(Primitive::min); ++i) {
        auto p = static_cast<Primitive>(i);
        if (name(p) == s) return p;
    }
    return std::nullopt;
}

struct DualValue {
    double value;
    double derivative;
};

namespace scalar {

inline double sigmoid(double x) noexcept
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double selu(double x) noexcept { return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x); }

inline double selu_derivative(double x) noexcept { return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x); }

// f(x) for a unary primitive. Shared by every evaluation path so values agree bit-for-bit.
inline double unary_value(Primitive p, double x) noexcept
{
    switch (p) {
    case Primitive::relu: return x > 0.0 ? x : 0.0;
    case Primitive::elu: return x > 0.0 ? x : std::expm1(x);
    case Primitive::sigmoid: return sigmoid(x);
    case Primitive::tanh: return std::tanh(x);
    case Primitive::swish: return x * sigmoid(x);
    case Primitive::sin: return std::sin(x);
    case Primitive::cos: return std::cos(x);
    case Primitive::atan: return std::atan(x);
    case Primitive::sinh: return std::sinh(x);
    case Primitive::cosh: return std::cosh(x);
    case Primitive::leaky_relu: return x >= 0.0 ? x : kLeakyReluSlope * x;
    case Primitive::softplus: return softplus(x);
    case Primitive::erf: return std::erf(x);
    case Primitive::abs: return std::abs(x);
    default: return x;
    }
}

// f'(x) given x and the already computed f(x). Kinks: relu'(0)=0, abs'(0)=0, leaky_relu'(0)=slope.
inline double unary_derivative(Primitive p, double x, double fx) noexcept
{
    switch (p) {
    case Primitive::relu: return x > 0.0 ? 1.0 : 0.0;
    case Primitive::elu: return x > 0.0 ? 1.0 : std::exp(x);
    case Primitive::sigmoid: return fx * (1.0 - fx);
    case Primitive::tanh: return 1.0 - fx * fx;
    case Primitive::swish: {
        const double s = sigmoid(x);
        return s + x * s * (1.0 - s);
    }
    case Primitive::sin: return std::cos(x);
    case Primitive::cos: return -std::sin(x);
    case Primitive::atan: return 1.0 / (1.0 + x * x);
    case Primitive::sinh: return std::cosh(x);
    case Primitive::cosh: return std::sinh(x);
    case Primitive::leaky_relu: return x > 0.0 ? 1.0 : kLeakyReluSlope;
    case Primitive::softplus: return sigmoid(x);
    case Primitive::erf: return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    case Primitive::abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    default: return 1.0;
    }
}

inline double binary_value(Primitive p, double a, double b) noexcept
{
    switch (p) {
    case Primitive::add: return a + b;
    case Primitive::sub: return a - b;
    case Primitive::mul: return a * b;
    case Primitive::max: return a >= b ? a : b;
    case Primitive::min: return a <= b ? a : b;
    default: return a;
    }
}

// Ties in max/min take the left argument's derivative.
inline DualValue binary_dual(Primitive p, DualValue a, DualValue b) noexcept
{
    switch (p) {
    case Primitive::add: return {binary_value(p, a.value, b.value), a.derivative + b.derivative};
    case Primitive::sub: return {binary_value(p, a.value, b.value), a.derivative - b.derivative};
    case Primitive::mul: return {binary_value(p, a.value, b.value), a.derivative * b.value + a.value * b.derivative};
    case Primitive::max: return a.value >= b.value ? a : b;
    case Primitive::min: return a.value <= b.value ? a : b;
    default: return a;
    }
}

} // namespace scalar

class ActivationTree {
public:
    // The lone leaf x.
    ActivationTree() : nodes_{Primitive::x} {}

    // Validates arity; throws std::invalid_argument on a malformed prefix sequence.
    static ActivationTree from_prefix(std::vector<Primitive> nodes)
    {
        std::ptrdiff_t open = 1;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (open <= 0) throw std::invalid_argument("prefix sequence has trailing nodes");
            open += arity(nodes[i]) - 1;
        }
        if (nodes.empty() || open != 0) throw std::invalid_argument("prefix sequence is incomplete");
        ActivationTree t;
        t.nodes_ = std::move(nodes);
        return t;
    }

    [[nodiscard]] std::span<const Primitive> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] Primitive root() const noexcept { return nodes_.front(); }
    [[nodiscard]] bool is_leaf() const noexcept { return nodes_.size() == 1; }

    [[nodiscard]] std::size_t internal_count() const noexcept
    {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](Primitive p) { return arity(p) > 0; }));
    }

    // One past the last node of the subtree rooted at `i`.
    [[nodiscard]] std::size_t subtree_end(std::size_t i) const noexcept
    {
        std::ptrdiff_t open = 1;
        while (open > 0) {
            open += arity(nodes_[i]) - 1;
            ++i;
        }
        return i;
    }

    // Index of each direct child of node `i`.
    [[nodiscard]] std::vector<std::size_t> children(std::size_t i) const
    {
        std::vector<std::size_t> out;
        std::size_t c = i + 1;
        for (int k = 0; k < arity(nodes_[i]); ++k) {
            out.push_back(c);
            c = subtree_end(c);
        }
        return out;
    }

    [[nodiscard]] ActivationTree subtree(std::size_t i) const
    {
        ActivationTree t;
        t.nodes_.assign(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                        nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i)));
        return t;
    }

    [[nodiscard]] ActivationTree with_subtree(std::size_t i, const ActivationTree& replacement) const
    {
        ActivationTree t;
        t.nodes_.reserve(nodes_.size() + replacement.size());
        t.nodes_.assign(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
        t.nodes_.insert(t.nodes_.end(), replacement.nodes_.begin(), replacement.nodes_.end());
        t.nodes_.insert(t.nodes_.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i)), nodes_.end());
        return t;
    }

    // Edge count of the longest root-to-leaf path.
    [[nodiscard]] int depth() const
    {
        std::vector<int> pending; // remaining children per open node
        int best = 0;
        for (Primitive p : nodes_) {
            best = std::max(best, static_cast<int>(pending.size()));
            if (!pending.empty()) --pending.back();
            if (arity(p) > 0) {
                pending.push_back(arity(p));
            }
            while (!pending.empty() && pending.back() == 0) pending.pop_back();
        }
        return best;
    }

    friend bool operator==(const ActivationTree&, const ActivationTree&) = default;

private:
    std::vector<Primitive> nodes_;
};

[[nodiscard]] inline ActivationTree leaf() { return {}; }

[[nodiscard]] inline ActivationTree unary(Primitive op, const ActivationTree& child)
{
    if (arity(op) != 1) throw std::invalid_argument(std::string(name(op)) + " is not unary");
    std::vector<Primitive> nodes{op};
    nodes.insert(nodes.end(), child.nodes().begin(), child.nodes().end());
    return ActivationTree::from_prefix(std::move(nodes));
}

[[nodiscard]] inline ActivationTree binary(Primitive op, const ActivationTree& left, const ActivationTree& right)
{
    if (arity(op) != 2) throw std::invalid_argument(std::string(name(op)) + " is not binary");
    std::vector<Primitive> nodes{op};
    nodes.insert(nodes.end(), left.nodes().begin(), left.nodes().end());
    nodes.insert(nodes.end(), right.nodes().begin(), right.nodes().end());
    return ActivationTree::from_prefix(std::move(nodes));
}

namespace detail {

inline double checked(double v)
{
    if (!std::isfinite(v)) throw NonFinite();
    return v;
}

inline double eval_at(std::span<const Primitive> nodes, std::size_t& i, double x)
{
    const Primitive p = nodes[i++];
    switch (arity(p)) {
    case 0: return x;
    case 1: return checked(scalar::unary_value(p, eval_at(nodes, i, x)));
    default: {
        const double a = eval_at(nodes, i, x);
        const double b = eval_at(nodes, i, x);
        return checked(scalar::binary_value(p, a, b));
    }
    }
}

inline DualValue checked(DualValue v)
{
    if (!std::isfinite(v.value) || !std::isfinite(v.derivative)) throw NonFinite();
    return v;
}

inline DualValue eval_dual_at(std::span<const Primitive> nodes, std::size_t& i, double x)
{
    const Primitive p = nodes[i++];
    switch (arity(p)) {
    case 0: return {x, 1.0};
    case 1: {
        const DualValue a = eval_dual_at(nodes, i, x);
        const double v = scalar::unary_value(p, a.value);
        return checked(DualValue{v, scalar::unary_derivative(p, a.value, v) * a.derivative});
    }
    default: {
        const DualValue a = eval_dual_at(nodes, i, x);
        const DualValue b = eval_dual_at(nodes, i, x);
        return checked(scalar::binary_dual(p, a, b));
    }
    }
}

} // namespace detail

// f(x); throws NonFinite if any intermediate overflows or is NaN.
[[nodiscard]] inline double eval(const ActivationTree& tree, double x)
{
    std::size_t i = 0;
    return detail::eval_at(tree.nodes(), i, x);
}

// (f(x), f'(x)) by forward-mode differentiation; throws NonFinite like eval.
[[nodiscard]] inline DualValue eval_dual(const ActivationTree& tree, double x)
{
    std::size_t i = 0;
    return detail::eval_dual_at(tree.nodes(), i, x);
}

// Evaluates a tree over whole arrays at once, one primitive at a time. Holds scratch
// buffers, so one instance must not be shared between threads.
class TreeKernel {
public:
    explicit TreeKernel(ActivationTree tree) : tree_(std::move(tree)) {}

    [[nodiscard]] const ActivationTree& tree() const noexcept { return tree_; }

    void operator()(std::span<const double> x, std::span<double> value, std::span<double> deriv)
    {
        const std::size_t n = x.size();
        auto nodes = tree_.nodes();
        std::size_t top = 0;
        // Reverse prefix order: children are complete when their parent is reached,
        // and the left child sits on top of the stack.
        for (std::size_t k = nodes.size(); k-- > 0;) {
            const Primitive p = nodes[k];
            const int a = arity(p);
            if (a == 0) {
                Slot& s = slot(top++, n);
                std::copy(x.begin(), x.end(), s.value.begin());
                std::fill(s.deriv.begin(), s.deriv.end(), 1.0);
                continue;
            }
            if (a == 1) {
                Slot& s = slots_[top - 1];
                for (std::size_t j = 0; j < n; ++j) {
                    const double in = s.value[j];
                    const double v = scalar::unary_value(p, in);
                    s.deriv[j] = scalar::unary_derivative(p, in, v) * s.deriv[j];
                    s.value[j] = v;
                }
                require_finite(s, n);
                continue;
            }
            Slot& left = slots_[top - 1];
            Slot& right = slots_[top - 2];
            for (std::size_t j = 0; j < n; ++j) {
                const DualValue r = scalar::binary_dual(p, {left.value[j], left.deriv[j]}, {right.value[j], right.deriv[j]});
                right.value[j] = r.value;
                right.deriv[j] = r.derivative;
            }
            --top;
            require_finite(slots_[top - 1], n);
        }
        const Slot& out = slots_[0];
        std::copy_n(out.value.begin(), n, value.begin());
        std::copy_n(out.deriv.begin(), n, deriv.begin());
    }

private:
    struct Slot {
        std::vector<double> value;
        std::vector<double> deriv;
    };

    Slot& slot(std::size_t i, std::size_t n)
    {
        if (slots_.size() <= i) slots_.resize(i + 1);
        Slot& s = slots_[i];
        if (s.value.size() < n) {
            s.value.resize(n);
            s.deriv.resize(n);
        }
        return s;
    }

    static void require_finite(const Slot& s, std::size_t n)
    {
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(s.value[j]) || !std::isfinite(s.deriv[j])) throw NonFinite();
        }
    }

    ActivationTree tree_;
    std::vector<Slot> slots_;
};

namespace detail {

inline void grow(std::vector<Primitive>& out, Rng& rng, int depth, int min_depth, int max_depth)
{
    int kind; // 0 leaf, 1 unary, 2 binary
    if (depth >= max_depth) {
        kind = 0;
    } else if (depth < min_depth) {
        kind = 1 + static_cast<int>(rng.below(2));
    } else {
        kind = static_cast<int>(rng.below(3));
    }
    if (kind == 0) {
        out.push_back(Primitive::x);
    } else if (kind == 1) {
        out.push_back(kUnaryPrimitives[rng.below(kUnaryPrimitives.size())]);
        grow(out, rng, depth + 1, min_depth, max_depth);
    } else {
        out.push_back(kBinaryPrimitives[rng.below(kBinaryPrimitives.size())]);
        grow(out, rng, depth + 1, min_depth, max_depth);
        grow(out, rng, depth + 1, min_depth, max_depth);
    }
}

} // namespace detail

// "Grow" generation: leaf/unary/binary with probability 1/3 each, non-leaf forced
// shallower than min_depth, leaf forced at max_depth.
[[nodiscard]] inline ActivationTree random_tree(Rng& rng, int min_depth, int max_depth)
{
    if (min_depth < 0 || max_depth < min_depth) throw std::invalid_argument("random_tree: need 0 <= min_depth <= max_depth");
    std::vector<Primitive> nodes;
    detail::grow(nodes, rng, 0, min_depth, max_depth);
    return ActivationTree::from_prefix(std::move(nodes));
}

// Prefix s-expression: `(op child...)`, leaf `x`.
[[nodiscard]] inline std::string to_string(const ActivationTree& tree)
{
    std::string out;
    std::vector<int> pending;
    for (Primitive p : tree.nodes()) {
        if (!pending.empty()) {
            if (out.back() != '(') out += ' ';
            --pending.back();
        }
        if (arity(p) == 0) {
            out += 'x';
        } else {
            out += '(';
            out += name(p);
            pending.push_back(arity(p));
        }
        while (!pending.empty() && pending.back() == 0) {
            out += ')';
            pending.pop_back();
        }
    }
    return out;
}

namespace detail {

class TreeParser {
public:
    explicit TreeParser(std::string_view text) : text_(text) {}

    ActivationTree parse()
    {
        std::vector<Primitive> nodes;
        expression(nodes);
        skip_space();
        if (pos_ != text_.size()) fail("end of input");
        return ActivationTree::from_prefix(std::move(nodes));
    }

private:
    void expression(std::vector<Primitive>& nodes)
    {
        skip_space();
        if (pos_ >= text_.size()) fail("'(' or 'x'");
        if (text_[pos_] == '(') {
            ++pos_;
            skip_space();
            const std::size_t at = pos_;
            const std::string_view word = token();
            auto p = primitive_from_name(word);
            if (!p || arity(*p) == 0) {
                pos_ = at;
                fail("operator name");
            }
            nodes.push_back(*p);
            for (int k = 0; k < arity(*p); ++k) expression(nodes);
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != ')') fail("')'");
            ++pos_;
            return;
        }
        const std::size_t at = pos_;
        if (token() != "x") {
            pos_ = at;
            fail("'(' or 'x'");
        }
        nodes.push_back(Primitive::x);
    }

    std::string_view token()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') ++pos_;
        return text_.substr(start, pos_ - start);
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

    void skip_space()
    {
        while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    }

    [[noreturn]] void fail(const std::string& expected) const
    {
        std::string found = "end of input";
        if (pos_ < text_.size()) {
            std::size_t end = pos_ + 1;
            while (end < text_.size() && !is_space(text_[end]) && text_[end] != '(' && text_[end] != ')') ++end;
            found = "'" + std::string(text_.substr(pos_, end - pos_)) + "'";
        }
        throw ParseError(pos_, expected, found);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace detail

[[nodiscard]] inline ActivationTree parse_tree(std::string_view text) { return detail::TreeParser(text).parse(); }

} // namespace evoact
