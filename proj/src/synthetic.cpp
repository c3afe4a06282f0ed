#include "qfs/synthetic.hpp"

#include <cmath>

#include "qfs/random.hpp"

namespace qfs {

CleanDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.informative + spec.noise == 0) throw DatasetError("synthetic spec has no features");
    if (spec.duplicates > spec.informative) {
        throw DatasetError("each duplicate copies an informative feature; duplicates <= informative");
    }
    if (!(spec.imbalance >= 1.0)) throw DatasetError("imbalance ratio must be at least 1");
    const auto minority = static_cast<std::size_t>(
        std::floor(static_cast<double>(spec.samples) / (spec.imbalance + 1.0) + 0.5));
    if (minority < 2 || spec.samples - minority < 2) {
        throw DatasetError("synthetic spec leaves fewer than 2 samples in a class");
    }

    CleanDataset out;
    out.label_name = spec.label_name;
    for (std::size_t k = 0; k < spec.informative; ++k) out.feature_names.push_back("inf_" + std::to_string(k));
    for (std::size_t k = 0; k < spec.duplicates; ++k) out.feature_names.push_back("dup_" + std::to_string(k));
    for (std::size_t k = 0; k < spec.noise; ++k) out.feature_names.push_back("noise_" + std::to_string(k));

    Rng rng(spec.seed);
    out.y.assign(spec.samples, 0);
    for (std::size_t i = spec.samples - minority; i < spec.samples; ++i) out.y[i] = 1;
    rng.shuffle(out.y.begin(), out.y.end());

    std::vector<double> delta(spec.informative, spec.signal_max);
    for (std::size_t k = 0; k < spec.informative && spec.informative > 1; ++k) {
        delta[k] = spec.signal_max - (spec.signal_max - spec.signal_min) * static_cast<double>(k) /
                                         static_cast<double>(spec.informative - 1);
    }

    out.x.reserve(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        std::vector<double> row;
        row.reserve(out.feature_names.size());
        for (std::size_t k = 0; k < spec.informative; ++k) row.push_back(rng.normal() + delta[k] * out.y[i]);
        for (std::size_t k = 0; k < spec.duplicates; ++k) row.push_back(row[k]);
        for (std::size_t k = 0; k < spec.noise; ++k) row.push_back(rng.uniform());
        out.x.push_back(std::move(row));
    }
    return out;
}

}  // namespace qfs
