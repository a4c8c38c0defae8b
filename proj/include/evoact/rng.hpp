#pragma once

// Deterministic, splittable randomness. Every stochastic site draws from a stream
// addressed by (master seed, path of (tag, index) pairs), so results never depend
// on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evoact {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

} // namespace detail

class StreamAddress {
public:
    StreamAddress() = default;
    StreamAddress(std::initializer_list<std::pair<std::string, std::uint64_t>> path) : path_(path) {}

    [[nodiscard]] StreamAddress with(std::string tag, std::uint64_t index) const
    {
        StreamAddress out = *this;
        out.path_.emplace_back(std::move(tag), index);
        return out;
    }

    [[nodiscard]] const auto& path() const noexcept { return path_; }

    friend bool operator==(const StreamAddress&, const StreamAddress&) = default;

private:
    std::vector<std::pair<std::string, std::uint64_t>> path_;
};

// xoshiro256** keyed by a 64-bit stream key. Satisfies UniformRandomBitGenerator,
// but the library only uses its own distribution helpers so draws are identical
// across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key = 0) noexcept : key_(key)
    {
        std::uint64_t s = key;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            word = detail::mix64(s);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        // Lemire's multiply-shift with rejection.
        std::uint64_t x = (*this)();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Standard normal via Box-Muller (no cached second variate).
    double normal() noexcept
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    // Independent child stream (key, fork counter). Does not advance this stream's draws.
    [[nodiscard]] Rng fork() noexcept { return Rng(detail::mix64(key_ ^ detail::mix64(++forks_ * 0xd1b54a32d192ed03ULL))); }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t forks_ = 0;
    std::array<std::uint64_t, 4> state_{};
};

[[nodiscard]] inline Rng derive(std::uint64_t master, const StreamAddress& address) noexcept
{
    std::uint64_t h = detail::mix64(master ^ 0x243f6a8885a308d3ULL);
    for (const auto& [tag, index] : address.path()) {
        h = detail::mix64(h ^ detail::fnv1a(tag));
        h = detail::mix64(h ^ detail::mix64(index + 0x13198a2e03707344ULL));
    }
    return Rng(h);
}

// Fisher-Yates with the library's own integer draws.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace evoact
