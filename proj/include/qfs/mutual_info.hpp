#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qfs/dataset.hpp"

namespace qfs {

class MiError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Feature-target and feature-feature mutual information, in nats.
/// pair_mi is a full symmetric n x n matrix; the diagonal is unused and kept at 0.
struct MiStatistics {
    std::size_t n = 0;
    std::vector<double> target_mi;
    std::vector<std::vector<double>> pair_mi;

    /// Throws MiError if shapes disagree, entries are negative or non-finite,
    /// or the pair matrix is not symmetric.
    void validate() const;
};

inline constexpr std::size_t kDefaultMiBins = 10;

/// Equal-width bin of a value in [0, 1]; values outside are clamped first.
std::size_t bin_index(double v, std::size_t bins) noexcept;

/// Plug-in mutual information of a contingency table given as row-major counts.
double mi_from_counts(std::span<const std::size_t> joint, std::size_t rows, std::size_t cols);

/// Histogram plug-in estimate between a [0,1] feature and a binary target.
double estimate_mi_feature_target(std::span<const double> x, std::span<const int> y,
                                  std::size_t bins = kDefaultMiBins);

/// Histogram plug-in estimate between two [0,1] features. Exactly symmetric.
double estimate_mi_feature_pair(std::span<const double> xi, std::span<const double> xj,
                                std::size_t bins = kDefaultMiBins);

/// Entropy (nats) of the equal-width histogram of x.
double binned_entropy(std::span<const double> x, std::size_t bins = kDefaultMiBins);

/// Statistics over a normalized training split. Pairs may be computed on
/// `threads` workers; results are placed by index, so output is independent of it.
MiStatistics build_mi_statistics(const CleanDataset& train, std::size_t bins = kDefaultMiBins,
                                 unsigned threads = 1);

/// {n, target_mi, pair_mi} with pair_mi as the strict upper triangle, row by row.
nlohmann::json to_json(const MiStatistics& mi);
MiStatistics mi_statistics_from_json(const nlohmann::json& j);

/// Cache key for a dataset/bin-count pair.
std::string mi_cache_key(const CleanDataset& train, std::size_t bins);

}  // namespace qfs
