#pragma once

// Repeated-run summaries and the Tukey HSD all-pairs test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evoact {

struct Summary {
    double mean = 0.0;
    double stddev = 0.0; // sample (n-1); 0 for a single sample
};

[[nodiscard]] inline Summary summarize(std::span<const double> samples)
{
    if (samples.empty()) throw std::invalid_argument("summarize: no samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

struct RunReport {
    std::string label;
    std::vector<double> samples;
};

struct TukeyResult {
    std::string first;
    std::string second;
    double mean_difference = 0.0; // mean(first) - mean(second)
    double q = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

namespace detail {

struct GaussLegendre {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// Golub-Welsch-free construction: Newton iteration on P_n from Chebyshev guesses.
inline GaussLegendre gauss_legendre(int n)
{
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        gl.nodes[i] = -z;
        gl.nodes[n - 1 - i] = z;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    return gl;
}

inline const GaussLegendre& gl128()
{
    static const GaussLegendre gl = gauss_legendre(128);
    return gl;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline constexpr double kNormalTruncation = 8.0;

// P(range of k iid standard normals <= w) = k * int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz.
inline double normal_range_cdf(double w, int k)
{
    if (w <= 0.0) return 0.0;
    const auto& gl = gl128();
    const double lo = -kNormalTruncation;
    const double hi = kNormalTruncation;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double z = mid + half * gl.nodes[i];
        const double inner = normal_cdf(z) - normal_cdf(z - w);
        if (inner <= 0.0) continue;
        sum += gl.weights[i] * normal_pdf(z) * std::pow(inner, k - 1);
    }
    return std::min(1.0, k * half * sum);
}

// log density of s = sqrt(chi2_df / df).
inline double log_scaled_chi_density(double s, double df)
{
    return 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0) + (df - 1.0) * std::log(s) -
           0.5 * df * s * s;
}

} // namespace detail

// CDF of the studentized range distribution with k groups and df degrees of freedom:
// F(q) = int_0^inf g_df(s) P_k(q s) ds, with the outer integral over 8 Gauss-Legendre
// panels covering the region where g_df is within e^-40 of its mode.
[[nodiscard]] inline double studentized_range_cdf(double q, int k, double df)
{
    if (k < 2 || !(df > 0.0)) throw std::invalid_argument("studentized_range_cdf: need k >= 2, df > 0");
    if (q <= 0.0) return 0.0;
    if (!std::isfinite(q)) return 1.0;

    const double mode = df > 1.0 ? std::sqrt((df - 1.0) / df) : 0.0;
    const double peak = mode > 0.0 ? detail::log_scaled_chi_density(mode, df) : detail::log_scaled_chi_density(1e-300, df);
    const double cutoff = (df >= 1.0 ? peak : 0.0) - 40.0;
    const double spread = std::max(0.05, 1.0 / std::sqrt(2.0 * df));
    double lo = mode;
    double hi = std::max(mode, 1e-3);
    while (detail::log_scaled_chi_density(hi, df) > cutoff) hi += spread;
    while (lo > 0.0 && detail::log_scaled_chi_density(lo, df) > cutoff) lo = std::max(0.0, lo - spread);

    const auto& gl = detail::gl128();
    constexpr int kPanels = 8;
    const double width = (hi - lo) / kPanels;
    double total = 0.0;
    for (int panel = 0; panel < kPanels; ++panel) {
        const double a = lo + width * panel;
        const double half = 0.5 * width;
        const double mid = a + half;
        double sum = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double s = mid + half * gl.nodes[i];
            if (s <= 0.0) continue;
            sum += gl.weights[i] * std::exp(detail::log_scaled_chi_density(s, df)) * detail::normal_range_cdf(q * s, k);
        }
        total += half * sum;
    }
    return std::clamp(total, 0.0, 1.0);
}

// Upper-tail quantile: the q with P(Q > q) = alpha.
[[nodiscard]] inline double studentized_range_critical(double alpha, int k, double df)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("studentized_range_critical: alpha must be in (0,1)");
    double lo = 0.0;
    double hi = 1.0;
    while (1.0 - studentized_range_cdf(hi, k, df) > alpha) hi *= 2.0;
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (1.0 - studentized_range_cdf(mid, k, df) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// All pairs (i < j) with the Tukey-Kramer standard error. When the pooled variance is
// zero, equal-mean pairs get p = 1 and all others p = 0.
[[nodiscard]] inline std::vector<TukeyResult> tukey_hsd(std::span<const RunReport> groups, double alpha = 0.05)
{
    if (groups.size() < 2) throw std::invalid_argument("tukey_hsd: need at least two groups");
    std::vector<double> means;
    double ss_within = 0.0;
    double df = 0.0;
    for (const auto& g : groups) {
        if (g.samples.size() < 2) throw std::invalid_argument("tukey_hsd: group '" + g.label + "' has fewer than two samples");
        const double m = summarize(g.samples).mean;
        means.push_back(m);
        for (double v : g.samples) ss_within += (v - m) * (v - m);
        df += static_cast<double>(g.samples.size()) - 1.0;
    }
    const double mse = ss_within / df;
    const int k = static_cast<int>(groups.size());

    std::vector<TukeyResult> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            TukeyResult r;
            r.first = groups[i].label;
            r.second = groups[j].label;
            r.mean_difference = means[i] - means[j];
            const double diff = std::abs(r.mean_difference);
            if (mse <= 0.0) {
                r.q = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
                r.p_value = diff == 0.0 ? 1.0 : 0.0;
            } else {
                const double ni = static_cast<double>(groups[i].samples.size());
                const double nj = static_cast<double>(groups[j].samples.size());
                r.q = diff / std::sqrt(mse / 2.0 * (1.0 / ni + 1.0 / nj));
                r.p_value = std::clamp(1.0 - studentized_range_cdf(r.q, k, df), 0.0, 1.0);
            }
            r.significant = r.p_value < alpha;
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace evoact
