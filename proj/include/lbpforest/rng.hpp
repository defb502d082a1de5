#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace lbpf {

/// splitmix64 step; the project's only primitive RNG. Chosen over the
/// <random> engines+distributions because distribution output is
/// implementation-defined, and model reproducibility depends on every
/// draw being the same on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from (master, index). Used to give
/// every tree, fold and forest its own stream so that parallel training
/// yields the same model as serial training.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform integer in [0, n). Debiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = next_u64();
        while (v > limit) v = next_u64();
        return v % n;
    }

    /// Uniform double in [0, 1).
    double real01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double real(double lo, double hi) { return lo + real01() * (hi - lo); }

    /// Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        double u1 = real01();
        while (u1 <= 0.0) u1 = real01();
        const double u2 = real01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace lbpf
