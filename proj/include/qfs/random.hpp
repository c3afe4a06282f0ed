#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qfs {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child seed for a numbered sub-stream (e.g. one annealing read).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Child seed for a named stage ("split", "smote", a dataset name, ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept;

/// Seeded stream with distribution helpers whose output does not depend on
/// the standard library implementation (std::*_distribution is unspecified).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, 1], both endpoints reachable.
    double uniform_closed() {
        return static_cast<double>(engine_() >> 11) / static_cast<double>((1ULL << 53) - 1);
    }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller.
    double normal();

    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = below(i);
            std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                           first + static_cast<std::ptrdiff_t>(j));
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qfs
