#include "qfs/mutual_info.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"

#include "qfs/util.hpp"

namespace qfs {

void MiStatistics::validate() const {
    if (target_mi.size() != n || pair_mi.size() != n) {
        throw MiError("MI statistics shape does not match n");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(target_mi[i]) || target_mi[i] < 0.0) {
            throw MiError("target MI must be finite and non-negative");
        }
        if (pair_mi[i].size() != n) throw MiError("pair MI matrix is not square");
        for (std::size_t j = 0; j < n; ++j) {
            double v = pair_mi[i][j];
            if (!std::isfinite(v) || v < 0.0) throw MiError("pair MI must be finite and non-negative");
            if (v != pair_mi[j][i]) throw MiError("pair MI matrix is not symmetric");
        }
    }
}

std::size_t bin_index(double v, std::size_t bins) noexcept {
    v = std::clamp(v, 0.0, 1.0);
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

double mi_from_counts(std::span<const std::size_t> joint, std::size_t rows, std::size_t cols) {
    if (joint.size() != rows * cols) throw MiError("contingency table shape mismatch");
    std::vector<std::size_t> row_sum(rows, 0), col_sum(cols, 0);
    std::size_t total = 0;
    for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = 0; b < cols; ++b) {
            auto c = joint[a * cols + b];
            row_sum[a] += c;
            col_sum[b] += c;
            total += c;
        }
    }
    if (total == 0) return 0.0;

    const double n = static_cast<double>(total);
    // Terms are summed in sorted order so a transposed table gives a bit-identical result.
    std::vector<double> terms;
    for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = 0; b < cols; ++b) {
            auto c = joint[a * cols + b];
            if (c == 0) continue;
            double pab = static_cast<double>(c) / n;
            double ratio = (static_cast<double>(c) * n) /
                           (static_cast<double>(row_sum[a]) * static_cast<double>(col_sum[b]));
            terms.push_back(pab * std::log(ratio));
        }
    }
    std::ranges::sort(terms);
    double mi = 0.0;
    for (double t : terms) mi += t;
    return std::max(mi, 0.0);
}

double estimate_mi_feature_target(std::span<const double> x, std::span<const int> y,
                                  std::size_t bins) {
    if (x.size() != y.size()) throw MiError("feature and target lengths differ");
    if (x.size() < 2) throw MiError("need at least 2 samples");
    if (bins < 2) throw MiError("bins must be at least 2");
    std::vector<std::size_t> joint(bins * 2, 0);
    for (std::size_t s = 0; s < x.size(); ++s) {
        if (y[s] != 0 && y[s] != 1) throw MiError("target must be binary");
        ++joint[bin_index(x[s], bins) * 2 + static_cast<std::size_t>(y[s])];
    }
    return mi_from_counts(joint, bins, 2);
}

double estimate_mi_feature_pair(std::span<const double> xi, std::span<const double> xj,
                                std::size_t bins) {
    if (xi.size() != xj.size()) throw MiError("feature lengths differ");
    if (xi.size() < 2) throw MiError("need at least 2 samples");
    if (bins < 2) throw MiError("bins must be at least 2");
    std::vector<std::size_t> joint(bins * bins, 0);
    for (std::size_t s = 0; s < xi.size(); ++s) {
        ++joint[bin_index(xi[s], bins) * bins + bin_index(xj[s], bins)];
    }
    return mi_from_counts(joint, bins, bins);
}

double binned_entropy(std::span<const double> x, std::size_t bins) {
    if (bins < 2) throw MiError("bins must be at least 2");
    if (x.empty()) return 0.0;
    std::vector<std::size_t> hist(bins, 0);
    for (double v : x) ++hist[bin_index(v, bins)];
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (auto c : hist) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

MiStatistics build_mi_statistics(const CleanDataset& train, std::size_t bins, unsigned threads) {
    train.check_shape();
    const auto n = train.features();
    MiStatistics mi;
    mi.n = n;
    mi.target_mi.resize(n);
    mi.pair_mi.assign(n, std::vector<double>(n, 0.0));

    std::vector<std::vector<double>> cols(n);
    for (std::size_t j = 0; j < n; ++j) cols[j] = train.column(j);
    for (std::size_t j = 0; j < n; ++j) {
        mi.target_mi[j] = estimate_mi_feature_target(cols[j], train.y, bins);
    }

    // Row i of the upper triangle is one work item; rows are strided over workers.
    auto work = [&](unsigned worker, unsigned stride) {
        for (std::size_t i = worker; i < n; i += stride) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double v = estimate_mi_feature_pair(cols[i], cols[j], bins);
                mi.pair_mi[i][j] = v;
                mi.pair_mi[j][i] = v;
            }
        }
    };
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    return mi;
}

nlohmann::json to_json(const MiStatistics& mi) {
    nlohmann::json upper = nlohmann::json::array();
    for (std::size_t i = 0; i < mi.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = i + 1; j < mi.n; ++j) row.push_back(mi.pair_mi[i][j]);
        upper.push_back(std::move(row));
    }
    return {{"n", mi.n}, {"target_mi", mi.target_mi}, {"pair_mi", std::move(upper)}};
}

MiStatistics mi_statistics_from_json(const nlohmann::json& j) {
    MiStatistics mi;
    try {
        mi.n = j.at("n").get<std::size_t>();
        mi.target_mi = j.at("target_mi").get<std::vector<double>>();
        const auto& upper = j.at("pair_mi");
        if (!upper.is_array() || upper.size() != mi.n) throw MiError("pair_mi must have n rows");
        mi.pair_mi.assign(mi.n, std::vector<double>(mi.n, 0.0));
        for (std::size_t i = 0; i < mi.n; ++i) {
            const auto& row = upper[i];
            if (row.size() != mi.n - i - 1) throw MiError("pair_mi row " + std::to_string(i) + " has wrong length");
            for (std::size_t k = 0; k < row.size(); ++k) {
                double v = row[k].get<double>();
                mi.pair_mi[i][i + 1 + k] = v;
                mi.pair_mi[i + 1 + k][i] = v;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw MiError(std::string("malformed MI statistics JSON: ") + e.what());
    }
    mi.validate();
    return mi;
}

std::string mi_cache_key(const CleanDataset& train, std::size_t bins) {
    return dataset_fingerprint(train) + "-b" + std::to_string(bins);
}

}  // namespace qfs
