#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "evoact/error.hpp"
#include "evoact/rng.hpp"

namespace evoact {

enum class InitScheme {
    random_normal,
    random_uniform,
    truncated_normal,
    variance_scaling,
    orthogonal,
    lecun_uniform,
    lecun_normal,
    glorot_uniform,
    glorot_normal,
    he_normal,
    he_uniform,
};

inline constexpr std::array<InitScheme, 11> kInitSchemes{
    InitScheme::random_normal, InitScheme::random_uniform, InitScheme::truncated_normal, InitScheme::variance_scaling,
    InitScheme::orthogonal,    InitScheme::lecun_uniform,  InitScheme::lecun_normal,     InitScheme::glorot_uniform,
    InitScheme::glorot_normal, InitScheme::he_normal,      InitScheme::he_uniform,
};

[[nodiscard]] constexpr std::string_view name(InitScheme s) noexcept
{
    switch (s) {
    case InitScheme::random_normal: return "random_normal";
    case InitScheme::random_uniform: return "random_uniform";
    case InitScheme::truncated_normal: return "truncated_normal";
    case InitScheme::variance_scaling: return "variance_scaling";
    case InitScheme::orthogonal: return "orthogonal";
    case InitScheme::lecun_uniform: return "lecun_uniform";
    case InitScheme::lecun_normal: return "lecun_normal";
    case InitScheme::glorot_uniform: return "glorot_uniform";
    case InitScheme::glorot_normal: return "glorot_normal";
    case InitScheme::he_normal: return "he_normal";
    case InitScheme::he_uniform: return "he_uniform";
    }
    return "?";
}

[[nodiscard]] inline InitScheme init_scheme_from_name(std::string_view s)
{
    for (InitScheme scheme : kInitSchemes) {
        if (name(scheme) == s) return scheme;
    }
    throw UnknownScheme(std::string(s));
}

// Stddev of a standard normal truncated to +-2 sigma.
inline constexpr double kTruncatedStddevRatio = 0.87962566103423978;
inline constexpr double kSmallInitScale = 0.05;

// Distribution parameters: stddev for the normal family, limit for the uniform family.
struct InitDistribution {
    enum class Family { normal, truncated_normal, uniform, orthogonal } family;
    double scale; // stddev (pre-truncation for truncated_normal) or uniform limit
};

[[nodiscard]] inline InitDistribution init_distribution(InitScheme scheme, int fan_in, int fan_out)
{
    using F = InitDistribution::Family;
    const double in = fan_in;
    const double sum = static_cast<double>(fan_in) + fan_out;
    switch (scheme) {
    case InitScheme::random_normal: return {F::normal, kSmallInitScale};
    case InitScheme::random_uniform: return {F::uniform, kSmallInitScale};
    case InitScheme::truncated_normal: return {F::truncated_normal, kSmallInitScale};
    case InitScheme::variance_scaling: return {F::truncated_normal, std::sqrt(1.0 / in) / kTruncatedStddevRatio};
    case InitScheme::orthogonal: return {F::orthogonal, 1.0};
    case InitScheme::lecun_uniform: return {F::uniform, std::sqrt(3.0 / in)};
    case InitScheme::lecun_normal: return {F::normal, std::sqrt(1.0 / in)};
    case InitScheme::glorot_uniform: return {F::uniform, std::sqrt(6.0 / sum)};
    case InitScheme::glorot_normal: return {F::normal, std::sqrt(2.0 / sum)};
    case InitScheme::he_normal: return {F::normal, std::sqrt(2.0 / in)};
    case InitScheme::he_uniform: return {F::uniform, std::sqrt(6.0 / in)};
    }
    throw UnknownScheme(std::to_string(static_cast<int>(scheme)));
}

// Q factor of a Gaussian matrix with the sign of R's diagonal folded in, gain 1.
[[nodiscard]] inline Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng)
{
    const bool wide = rows < cols;
    const int m = wide ? cols : rows;
    const int n = wide ? rows : cols;
    Eigen::MatrixXd a(m, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i) a(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
    const auto& r = qr.matrixQR();
    for (int j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    if (wide) return q.transpose();
    return q;
}

// rows x cols matrix of weights for a layer with the given fan-in/fan-out.
[[nodiscard]] inline Eigen::MatrixXd sample_weights(InitScheme scheme, int fan_in, int fan_out, int rows, int cols, Rng& rng)
{
    if (fan_in < 1 || fan_out < 1 || rows < 1 || cols < 1) throw std::invalid_argument("sample_weights: dimensions must be positive");
    const InitDistribution dist = init_distribution(scheme, fan_in, fan_out);
    using F = InitDistribution::Family;
    if (dist.family == F::orthogonal) return orthogonal_matrix(rows, cols, rng);

    Eigen::MatrixXd w(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            double v;
            switch (dist.family) {
            case F::normal: v = dist.scale * rng.normal(); break;
            case F::uniform: v = rng.uniform(-dist.scale, dist.scale); break;
            default: {
                double z;
                do z = rng.normal();
                while (std::abs(z) > 2.0);
                v = dist.scale * z;
            }
            }
            w(i, j) = v;
        }
    }
    return w;
}

} // namespace evoact
