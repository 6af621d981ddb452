#include "cota/rng.hpp"

#include <cmath>

namespace cota {

double Rng::normal() {
    // Box-Muller on our own uniforms keeps the stream portable.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t side) {
    return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (side + 0x51ed2701ULL));
}

}  // namespace cota
