#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace bcirl {

/// Deterministic RNG used throughout the library. All sampling goes through
/// the explicit formulas below rather than std distributions, so that a
/// given seed produces the same stream on every platform and toolchain.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed + 0x9e3779b97f4a7c15ull)) {}

    /// Derive an independent stream for a sub-task (per-demo rollout,
    /// per-seed run, ...) without correlating with the parent stream.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        return splitmix(seed ^ (0xbf58476d1ce4e5b9ull * (stream + 1)));
    }

    /// Next raw 64-bit value (xorshift64*).
    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Vector of iid normals scaled by `scale`.
    Eigen::VectorXd normal_vector(int dim, double scale) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = scale * normal();
        return v;
    }

    /// Sample an index from an unnormalized nonnegative weight vector by
    /// CDF inversion.
    int categorical(const Eigen::VectorXd& weights) {
        const double total = weights.sum();
        if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
        double u = uniform() * total;
        for (int i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return static_cast<int>(weights.size()) - 1;
    }

  private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
};

}  // namespace bcirl
