#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace scalefree {

// Substream keys. Learner and environment never share a stream, so a run's
// action sequence depends on the losses only through what the learner observes.
enum class StreamKey : std::uint64_t {
    algorithm = 1,
    adversary = 2,
    environment = 3,
    explorer = 4,
    instance = 5,
};

// Deterministic random stream keyed by (seed, substream).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamKey key, std::uint64_t index = 0);

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits; independent of the standard
    // library's distribution implementations.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal by Box-Muller; consumes two uniforms.
    double normal();

    // Inverse-CDF draw from an (approximately) normalized probability vector.
    std::size_t sample(std::span<const double> probs) { return sample_with(probs, uniform()); }

    std::mt19937_64& engine() { return engine_; }

    static std::size_t sample_with(std::span<const double> probs, double u);

private:
    std::mt19937_64 engine_;
};

}  // namespace scalefree
