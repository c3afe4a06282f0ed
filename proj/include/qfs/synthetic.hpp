#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "qfs/dataset.hpp"

namespace qfs {

/// Planted-structure dataset: informative columns inf_k ~ N(0,1) + delta_k * y,
/// exact copies dup_k of inf_k, and noise_k ~ U(0,1) independent of everything.
/// delta_k runs linearly from signal_max (k = 0) down to signal_min.
struct SyntheticSpec {
    std::size_t informative = 10;
    std::size_t duplicates = 5;
    std::size_t noise = 5;
    std::size_t samples = 1000;
    /// Majority : minority ratio; class 1 is the minority.
    double imbalance = 4.0;
    double signal_max = 0.25;
    double signal_min = 0.15;
    std::uint64_t seed = 0;
    std::string label_name = "bug";
};

CleanDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace qfs
