#pragma once

// Numerical shape properties of an activation function and their population fractions.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "evoact/activation.hpp"
#include "evoact/error.hpp"

namespace evoact {

struct PropertyVector {
    bool monotone_nondecreasing = false;
    bool zero_on_nonpositive = false;
    bool upper_unbounded = false;
    bool lower_unbounded = false;

    friend bool operator==(const PropertyVector&, const PropertyVector&) = default;
};

// Probe grids. Defaults classify every primitive and every closed-form baseline.
struct PropertyGrid {
    double lo = -100.0;
    double hi = 100.0;
    int points = 10001;
    double monotone_tolerance = 1e-9;
    double zero_tolerance = 1e-9;
    int min_exponent = 1; // unboundedness probes at +-10^k
    int max_exponent = 6;
    double unbounded_threshold = 1e3;
};

struct Probe {
    double x;
    std::optional<double> fx; // empty when the evaluation was non-finite
};

struct PropertyReport {
    PropertyVector flags;
    std::vector<Probe> upper_probes;
    std::vector<Probe> lower_probes;
};

namespace detail {

template <class F>
std::optional<double> try_eval(F& f, double x)
{
    try {
        const double v = f(x);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const NonFinite&) {
        return std::nullopt;
    }
}

// Strictly monotone in the given direction with a large final magnitude. A non-finite
// probe falls back to the sign of the last finite probe.
inline bool unbounded(const std::vector<Probe>& probes, double sign, double threshold)
{
    std::optional<double> last;
    bool strict = true;
    for (const Probe& p : probes) {
        if (!p.fx) return last && sign * *last > 0.0;
        if (last && !(sign * *p.fx > sign * *last)) strict = false;
        last = p.fx;
    }
    return strict && last && sign * *last > threshold;
}

} // namespace detail

// `f` is any double(double) callable; it may throw NonFinite.
template <class F>
[[nodiscard]] PropertyReport analyze_report(F&& f, const PropertyGrid& grid = {})
{
    if (grid.points < 2 || !(grid.hi > grid.lo)) throw std::invalid_argument("property grid needs >= 2 points on a non-empty range");
    PropertyReport report;
    PropertyVector& flags = report.flags;

    bool monotone = true;
    bool zero = true;
    std::optional<double> prev;
    const double step = (grid.hi - grid.lo) / (grid.points - 1);
    for (int i = 0; i < grid.points; ++i) {
        const double x = i + 1 == grid.points ? grid.hi : grid.lo + step * i;
        const auto fx = detail::try_eval(f, x);
        if (!fx) {
            monotone = false;
            if (x <= 0.0) zero = false;
            prev.reset();
            continue;
        }
        if (prev && *fx < *prev - grid.monotone_tolerance * std::max(1.0, std::abs(*prev))) monotone = false;
        if (x <= 0.0 && std::abs(*fx) > grid.zero_tolerance) zero = false;
        prev = fx;
    }
    flags.monotone_nondecreasing = monotone;
    flags.zero_on_nonpositive = zero;

    for (int k = grid.min_exponent; k <= grid.max_exponent; ++k) {
        const double x = std::pow(10.0, k);
        report.upper_probes.push_back({x, detail::try_eval(f, x)});
        report.lower_probes.push_back({-x, detail::try_eval(f, -x)});
    }
    flags.upper_unbounded = detail::unbounded(report.upper_probes, 1.0, grid.unbounded_threshold);
    flags.lower_unbounded = detail::unbounded(report.lower_probes, -1.0, grid.unbounded_threshold);
    return report;
}

template <class F>
[[nodiscard]] PropertyVector analyze_function(F&& f, const PropertyGrid& grid = {})
{
    return analyze_report(std::forward<F>(f), grid).flags;
}

[[nodiscard]] inline PropertyVector analyze(const ActivationTree& tree, const PropertyGrid& grid = {})
{
    return analyze_function([&tree](double x) { return eval(tree, x); }, grid);
}

struct PropertyFractions {
    double monotone_nondecreasing = 0.0;
    double zero_on_nonpositive = 0.0;
    double upper_unbounded = 0.0;
    double lower_unbounded = 0.0;

    friend bool operator==(const PropertyFractions&, const PropertyFractions&) = default;
};

[[nodiscard]] inline PropertyFractions population_fractions(std::span<const PropertyVector> population)
{
    if (population.empty()) throw std::invalid_argument("population_fractions: empty population");
    int counts[4] = {0, 0, 0, 0};
    for (const auto& p : population) {
        counts[0] += p.monotone_nondecreasing;
        counts[1] += p.zero_on_nonpositive;
        counts[2] += p.upper_unbounded;
        counts[3] += p.lower_unbounded;
    }
    const double n = static_cast<double>(population.size());
    return {counts[0] / n, counts[1] / n, counts[2] / n, counts[3] / n};
}

} // namespace evoact
