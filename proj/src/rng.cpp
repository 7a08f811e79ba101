#include "cfdiff/rng.hpp"

#include <cmath>

namespace cfdiff {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(root ^ (static_cast<std::uint64_t>(stream) << 56));
    return splitmix64(h + 0x632be59bd9b4e019ULL * (index + 1));
}

double Rng::uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // rejection-free modulo is fine here; span is tiny relative to 2^64
    return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
    // Box-Muller, cosine branch only; two uniforms per draw
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

std::complex<double> Rng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

}  // namespace cfdiff
