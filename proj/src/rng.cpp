#include "agentsearch/rng.hpp"

namespace agentsearch {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) noexcept
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) noexcept
{
    return mix64(mix64(master ^ fnv1a(stream)) + index);
}

std::size_t Rng::categorical(std::span<const double> probs)
{
    const double u = uniform01();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) {
            return i;
        }
    }
    // Rounding left the cumulative sum just below 1; take the last nonzero entry.
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) {
            return i;
        }
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

}  // namespace agentsearch
