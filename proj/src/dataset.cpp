#include "qfs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "qfs/random.hpp"
#include "qfs/util.hpp"

namespace qfs {

const WarningSink& stderr_warnings() {
    static const WarningSink sink = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<double> parse_label(std::string_view cell, const CsvOptions& options,
                                  std::size_t row) {
    auto s = trim(cell);
    if (s.empty()) return std::nullopt;
    if (auto v = parse_number(s)) {
        if (*v == 0.0 || *v == 1.0) return *v;
        throw DatasetError("label value '" + std::string(s) + "' at data row " +
                           std::to_string(row) + " is outside {0,1}");
    }
    if (options.truthy_labels) {
        auto lower = to_lower(s);
        if (lower == "true" || lower == "y" || lower == "yes" || lower == "buggy") return 1.0;
        if (lower == "false" || lower == "n" || lower == "no" || lower == "clean") return 0.0;
    }
    throw DatasetError("label value '" + std::string(s) + "' at data row " + std::to_string(row) +
                       " is not a recognised class");
}

}  // namespace

RawTable parse_csv(std::string_view text, std::string_view label_column,
                   const CsvOptions& options) {
    std::vector<std::vector<std::string>> records;
    try {
        records = split_csv_records(text, options.delimiter);
    } catch (const std::runtime_error& e) {
        throw DatasetError(e.what());
    }
    if (records.empty()) throw DatasetError("malformed CSV: missing header row");

    RawTable table;
    for (auto& name : records.front()) table.column_names.emplace_back(trim(name));

    auto it = std::ranges::find(table.column_names, trim(label_column));
    if (it == table.column_names.end()) {
        throw DatasetError("label column '" + std::string(label_column) + "' not found");
    }
    table.label_index = static_cast<std::size_t>(it - table.column_names.begin());

    const auto arity = table.column_names.size();
    table.rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != arity) {
            throw DatasetError("malformed CSV: data row " + std::to_string(r) + " has " +
                               std::to_string(rec.size()) + " fields, expected " +
                               std::to_string(arity));
        }
        std::vector<std::optional<double>> row(arity);
        for (std::size_t c = 0; c < arity; ++c) {
            if (c == table.label_index) {
                row[c] = parse_label(rec[c], options, r);
                continue;
            }
            auto cell = trim(rec[c]);
            if (cell.empty()) continue;
            auto v = parse_number(cell);
            if (!v) {
                throw DatasetError("non-numeric value '" + std::string(cell) + "' at data row " +
                                   std::to_string(r) + ", column '" + table.column_names[c] + "'");
            }
            row[c] = v;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

RawTable load_csv(const std::filesystem::path& path, std::string_view label_column,
                  const CsvOptions& options) {
    if (!std::filesystem::exists(path)) {
        throw DatasetError("dataset file not found: " + path.string());
    }
    return parse_csv(read_file(path), label_column, options);
}

// ---------------------------------------------------------------------------
// CleanDataset

ClassCounts CleanDataset::class_counts() const noexcept {
    ClassCounts counts{0, 0};
    for (int label : y) ++counts[label == 1 ? 1 : 0];
    return counts;
}

std::vector<double> CleanDataset::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows());
    for (const auto& row : x) out.push_back(row.at(j));
    return out;
}

CleanDataset CleanDataset::select_features(std::span<const std::size_t> columns) const {
    CleanDataset out;
    out.label_name = label_name;
    out.y = y;
    for (auto c : columns) {
        if (c >= features()) throw DatasetError("feature index out of range");
        out.feature_names.push_back(feature_names[c]);
    }
    out.x.reserve(rows());
    for (const auto& row : x) {
        std::vector<double> sel;
        sel.reserve(columns.size());
        for (auto c : columns) sel.push_back(row[c]);
        out.x.push_back(std::move(sel));
    }
    return out;
}

void CleanDataset::check_shape() const {
    if (x.size() != y.size()) throw DatasetError("row count of x and y differ");
    for (const auto& row : x) {
        if (row.size() != features()) throw DatasetError("row arity differs from feature count");
        for (double v : row) {
            if (!std::isfinite(v)) throw DatasetError("non-finite feature value");
        }
    }
    for (int label : y) {
        if (label != 0 && label != 1) throw DatasetError("label outside {0,1}");
    }
}

// ---------------------------------------------------------------------------
// Cleaning

CleanDataset clean(const RawTable& raw) {
    const auto arity = raw.column_names.size();
    if (raw.feature_count() < 1) throw DatasetError("dataset has no feature columns");
    if (raw.label_index >= arity) throw DatasetError("label column index out of range");

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < arity; ++c) {
        if (c != raw.label_index) feature_cols.push_back(c);
    }

    // Rows without a label cannot be imputed; they are dropped.
    std::vector<const std::vector<std::optional<double>>*> labelled;
    for (const auto& row : raw.rows) {
        if (row.size() != arity) throw DatasetError("row arity differs from header");
        if (row[raw.label_index]) labelled.push_back(&row);
    }
    if (labelled.size() < 2) throw DatasetError("dataset needs at least 2 labelled rows");

    std::vector<double> means(feature_cols.size(), 0.0);
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto* row : labelled) {
            if (const auto& cell = (*row)[feature_cols[f]]) {
                sum += *cell;
                ++n;
            }
        }
        means[f] = n > 0 ? sum / static_cast<double>(n) : 0.0;
    }

    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    std::set<std::vector<double>> seen;
    for (const auto* row : labelled) {
        std::vector<double> values(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const auto& cell = (*row)[feature_cols[f]];
            values[f] = cell ? *cell : means[f];
        }
        int label = *(*row)[raw.label_index] == 1.0 ? 1 : 0;
        auto key = values;
        key.push_back(label);
        if (!seen.insert(std::move(key)).second) continue;
        xs.push_back(std::move(values));
        ys.push_back(label);
    }

    std::vector<std::size_t> keep;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        bool constant = std::ranges::all_of(xs, [&](const auto& r) { return r[f] == xs[0][f]; });
        if (!constant) keep.push_back(f);
    }
    if (keep.empty()) throw DatasetError("all feature columns are constant");

    CleanDataset out;
    out.label_name = raw.column_names[raw.label_index];
    for (auto f : keep) out.feature_names.push_back(raw.column_names[feature_cols[f]]);
    out.x.reserve(xs.size());
    for (auto& r : xs) {
        std::vector<double> kept;
        kept.reserve(keep.size());
        for (auto f : keep) kept.push_back(r[f]);
        out.x.push_back(std::move(kept));
    }
    out.y = std::move(ys);

    auto counts = out.class_counts();
    if (counts[0] == 0 || counts[1] == 0) {
        throw DatasetError("a class is absent after cleaning");
    }
    return out;
}

// ---------------------------------------------------------------------------
// SMOTE

CleanDataset smote_balance(const CleanDataset& data, std::size_t k, std::uint64_t seed,
                           const WarningSink& warn) {
    data.check_shape();
    if (k < 1) throw DatasetError("SMOTE neighbour count must be at least 1");
    auto counts = data.class_counts();
    if (counts[0] == counts[1]) return data;

    const int minority_label = counts[1] < counts[0] ? 1 : 0;
    const std::size_t majority = std::max(counts[0], counts[1]);
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (data.y[i] == minority_label) minority.push_back(i);
    }
    if (minority.size() < 2) {
        throw DatasetError("SMOTE needs at least 2 minority samples, found " +
                           std::to_string(minority.size()));
    }
    if (k > minority.size() - 1) {
        std::ostringstream msg;
        msg << "SMOTE k=" << k << " exceeds minority size - 1; clamped to "
            << minority.size() - 1;
        if (warn) warn(msg.str());
        k = minority.size() - 1;
    }

    const auto dims = data.features();
    auto sq_dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            double diff = data.x[a][d] - data.x[b][d];
            s += diff * diff;
        }
        return s;
    };

    // k nearest minority neighbours of every minority sample; ties by row index.
    std::vector<std::vector<std::size_t>> neighbours(minority.size());
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t a = 0; a < minority.size(); ++a) {
        cand.clear();
        for (std::size_t b = 0; b < minority.size(); ++b) {
            if (b != a) cand.emplace_back(sq_dist(minority[a], minority[b]), b);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t i = 0; i < k; ++i) neighbours[a].push_back(cand[i].second);
    }

    CleanDataset out = data;
    const std::size_t needed = majority - minority.size();
    out.x.reserve(data.rows() + needed);
    out.y.reserve(data.rows() + needed);
    Rng rng(seed);
    for (std::size_t s = 0; s < needed; ++s) {
        auto a = rng.below(minority.size());
        auto b = neighbours[a][rng.below(k)];
        double gap = rng.uniform_closed();
        const auto& pa = data.x[minority[a]];
        const auto& pb = data.x[minority[b]];
        std::vector<double> point(dims);
        for (std::size_t d = 0; d < dims; ++d) point[d] = pa[d] + gap * (pb[d] - pa[d]);
        out.x.push_back(std::move(point));
        out.y.push_back(minority_label);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Split

namespace {

CleanDataset take_rows(const CleanDataset& data, std::span<const std::size_t> rows) {
    CleanDataset out;
    out.feature_names = data.feature_names;
    out.label_name = data.label_name;
    out.x.reserve(rows.size());
    out.y.reserve(rows.size());
    for (auto r : rows) {
        out.x.push_back(data.x[r]);
        out.y.push_back(data.y[r]);
    }
    return out;
}

std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

}  // namespace

SplitPair stratified_split(const CleanDataset& data, double test_fraction, std::uint64_t seed) {
    data.check_shape();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DatasetError("test_fraction must lie strictly between 0 and 1");
    }
    auto counts = data.class_counts();
    for (int c = 0; c < 2; ++c) {
        if (counts[c] < 2) {
            throw DatasetError("class " + std::to_string(c) +
                               " has fewer than 2 samples; cannot stratify");
        }
    }
    // Each side needs one sample of each class.
    const auto n = data.rows();
    const auto total_test = round_half_up(static_cast<double>(n) * test_fraction);
    if (total_test < 2 || n - total_test < 2) {
        throw DatasetError("test_fraction " + format_double(test_fraction) + " leaves " +
                           std::to_string(total_test) + " test and " +
                           std::to_string(n - total_test) +
                           " train samples; each split needs one sample per class");
    }

    SplitPair pair;
    pair.seed = seed;
    pair.test_fraction = test_fraction;
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (data.y[i] == c) idx.push_back(i);
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(idx.begin(), idx.end());
        auto n_test = round_half_up(static_cast<double>(idx.size()) * test_fraction);
        n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        pair.test_rows.insert(pair.test_rows.end(), idx.begin(),
                              idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        pair.train_rows.insert(pair.train_rows.end(),
                               idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::ranges::sort(pair.test_rows);
    std::ranges::sort(pair.train_rows);
    pair.train = take_rows(data, pair.train_rows);
    pair.test = take_rows(data, pair.test_rows);
    return pair;
}

std::string SplitPair::fingerprint() const {
    Fnv1a h;
    h.update_u64(train_rows.size());
    for (auto r : train_rows) h.update_u64(r);
    h.update_u64(test_rows.size());
    for (auto r : test_rows) h.update_u64(r);
    return h.hex();
}

// ---------------------------------------------------------------------------
// Min-max scaling

ScalerParams fit_scaler(const CleanDataset& train) {
    train.check_shape();
    if (train.rows() == 0) throw DatasetError("cannot fit scaler on an empty dataset");
    ScalerParams p;
    p.min = train.x.front();
    p.max = train.x.front();
    for (const auto& row : train.x) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            p.min[j] = std::min(p.min[j], row[j]);
            p.max[j] = std::max(p.max[j], row[j]);
        }
    }
    return p;
}

namespace {
void check_params(const ScalerParams& params, const CleanDataset& data) {
    if (params.min.size() != data.features() || params.max.size() != data.features()) {
        throw DatasetError("scaler fitted on " + std::to_string(params.min.size()) +
                           " features applied to " + std::to_string(data.features()));
    }
}
}  // namespace

CleanDataset apply_scaler(const ScalerParams& params, const CleanDataset& data) {
    check_params(params, data);
    CleanDataset out = data;
    for (auto& row : out.x) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            double range = params.max[j] - params.min[j];
            row[j] = range > 0.0 ? std::clamp((row[j] - params.min[j]) / range, 0.0, 1.0) : 0.0;
        }
    }
    return out;
}

CleanDataset invert_scaler(const ScalerParams& params, const CleanDataset& data) {
    check_params(params, data);
    CleanDataset out = data;
    for (auto& row : out.x) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = params.min[j] + row[j] * (params.max[j] - params.min[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output

std::string to_csv(const CleanDataset& data, char delimiter) {
    std::string out;
    for (const auto& name : data.feature_names) {
        out += name;
        out += delimiter;
    }
    out += data.label_name;
    out += '\n';
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (double v : data.x[i]) {
            out += format_double(v);
            out += delimiter;
        }
        out += data.y[i] == 1 ? '1' : '0';
        out += '\n';
    }
    return out;
}

void write_csv(const CleanDataset& data, const std::filesystem::path& path, char delimiter) {
    write_file_atomic(path, to_csv(data, delimiter));
}

std::string dataset_fingerprint(const CleanDataset& data) {
    Fnv1a h;
    for (const auto& name : data.feature_names) {
        h.update(name);
        h.update(std::string_view("\x1f", 1));
    }
    h.update_u64(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (double v : data.x[i]) h.update_double(v);
        h.update_u64(static_cast<std::uint64_t>(data.y[i]));
    }
    return h.hex();
}

}  // namespace qfs
