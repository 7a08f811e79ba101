#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfdiff {

// Named sub-streams derived from one root seed. Keeping the derivation
// explicit makes every random quantity reproducible from (seed, stream, index).
enum class Stream : std::uint64_t {
    kSample = 1,     // dataset sample worlds
    kSplit = 2,      // train/val/test shuffle
    kInit = 3,       // parameter initialization
    kEpoch = 4,      // batch order + diffusion draws per epoch
    kTrial = 5,      // benchmark sweep trials
    kGeneric = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic child seed for (root, stream, index).
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index);

// mt19937_64 wrapped with explicit distributions. std::*_distribution is
// implementation-defined, so uniform/normal draws are generated by hand to
// keep datasets and checkpoints byte-stable across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi);
    // standard normal via Box-Muller
    double normal();
    // circularly symmetric complex Gaussian with E|z|^2 = variance
    std::complex<double> complex_normal(double variance);

    std::uint64_t seed() const { return seed_; }

    // Independent child stream; untouched by draws made on this instance.
    Rng derive(Stream stream, std::uint64_t index) const {
        return Rng(derive_seed(seed_, stream, index));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace cfdiff
