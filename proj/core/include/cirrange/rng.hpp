// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cirrange {

/// One step of the SplitMix64 generator: advances \p state and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives a child seed from a parent seed and a list of indices. Order matters.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

/// Seeded random source with platform-independent distributions.
///
/// std::mt19937_64 is fully specified by the standard, but the std:: distributions
/// are not, so uniform/normal draws are implemented here to keep datasets
/// bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in (0, 1).
    double uniform_open();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi);
    double normal();
    double exponential(double mean);
    /// Circularly-symmetric complex Gaussian with E|z|^2 == 1.
    std::complex<double> complex_normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cirrange
