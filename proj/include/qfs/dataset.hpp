#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qfs {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Receives non-fatal diagnostics (k clamping and the like).
using WarningSink = std::function<void(std::string_view)>;

/// Writes "warning: <msg>" to stderr.
const WarningSink& stderr_warnings();

struct CsvOptions {
    char delimiter = ',';
    /// Accept true/yes/y/buggy and false/no/n/clean (any case) as labels.
    bool truthy_labels = false;
};

/// A parsed delimited file. Cells are kept row-major, label column included.
struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::optional<double>>> rows;
    std::size_t label_index = 0;

    std::size_t feature_count() const noexcept {
        return column_names.empty() ? 0 : column_names.size() - 1;
    }
};

RawTable parse_csv(std::string_view text, std::string_view label_column,
                   const CsvOptions& options = {});
RawTable load_csv(const std::filesystem::path& path, std::string_view label_column,
                  const CsvOptions& options = {});

using ClassCounts = std::array<std::size_t, 2>;

/// Numeric features and binary labels (0 = clean, 1 = buggy). Rows are samples.
struct CleanDataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::string label_name = "label";

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t features() const noexcept { return feature_names.size(); }

    ClassCounts class_counts() const noexcept;
    std::vector<double> column(std::size_t j) const;

    /// Copy keeping only the given feature columns, in the given order.
    CleanDataset select_features(std::span<const std::size_t> columns) const;

    /// Throws DatasetError unless shapes agree, labels are 0/1 and values are finite.
    void check_shape() const;
};

/// Mean imputation, exact duplicate-row removal (first occurrence kept),
/// constant-column removal, in that order.
CleanDataset clean(const RawTable& raw);

/// Oversamples the minority class up to the majority count. Originals come
/// first and unchanged; synthetic rows are appended.
CleanDataset smote_balance(const CleanDataset& data, std::size_t k, std::uint64_t seed,
                           const WarningSink& warn = stderr_warnings());

struct SplitPair {
    CleanDataset train;
    CleanDataset test;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    /// Row indices into the input dataset.
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;

    /// Identifies the partition; equal fingerprints mean an identical test split.
    std::string fingerprint() const;
};

SplitPair stratified_split(const CleanDataset& data, double test_fraction, std::uint64_t seed);

struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;
};

ScalerParams fit_scaler(const CleanDataset& train);

/// (v - min) / (max - min), clamped to [0, 1]. A feature with max == min maps to 0.
CleanDataset apply_scaler(const ScalerParams& params, const CleanDataset& data);

/// Inverse of apply_scaler on unclamped values.
CleanDataset invert_scaler(const ScalerParams& params, const CleanDataset& data);

std::string to_csv(const CleanDataset& data, char delimiter = ',');
void write_csv(const CleanDataset& data, const std::filesystem::path& path, char delimiter = ',');

/// Stable content hash over names, values and labels.
std::string dataset_fingerprint(const CleanDataset& data);

}  // namespace qfs
