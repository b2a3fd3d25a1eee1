#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace agentsearch {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines a master seed with a stream label and an index into a new seed.
/// Stable across platforms and releases: event logs depend on it.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) noexcept;

/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Deterministic random source. Only the raw mt19937_64 output is used, never
/// the implementation-defined std:: distributions, so draws are identical on
/// every standard library.
class Rng {
public:
    /// The seed is scrambled first: raw consecutive seeds give visibly
    /// correlated leading draws from mt19937_64.
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Index drawn from a probability vector (entries sum to 1).
    std::size_t categorical(std::span<const double> probs);

private:
    std::mt19937_64 engine_;
};

}  // namespace agentsearch
