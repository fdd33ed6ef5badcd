#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dnpg {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of `master`:
///   splitmix64(master ^ splitmix64(stream + 1))
/// Chains, pipeline stages and training all take their generator from here.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 1));
}

/// Reproducible generator: std::mt19937_64 (whose output sequence is fixed by
/// the standard) plus hand-rolled transforms, since the std distributions are
/// implementation-defined.
///
/// uniform():   (u64 >> 11) * 2^-53, in [0, 1)
/// normal():    Box-Muller on (1 - u1, u2); both outputs are used in order
/// below(n):    Lemire multiply-shift with rejection
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Eigen::VectorXd normal_vector(Eigen::Index d);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace dnpg
