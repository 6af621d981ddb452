#pragma once

#include <cstdint>
#include <random>

namespace cota {

// mt19937_64 has a bit-exact output sequence fixed by the C++ standard.
// Doubles are built from the top 53 bits so the stream is portable too;
// std distributions are avoided on purpose.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next_u64() { return eng_(); }
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    double normal();

private:
    std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for a (seed, index, side) triple.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t side);

}  // namespace cota
