#include "qfs/random.hpp"

#include <cmath>
#include <numbers>

#include "qfs/util.hpp"

namespace qfs {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
    Fnv1a h;
    h.update(tag);
    return derive_seed(parent, h.digest());
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // threshold = 2^64 mod bound
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        auto r = engine_();
        if (r >= threshold) return r % bound;
    }
}

double Rng::normal() {
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qfs
