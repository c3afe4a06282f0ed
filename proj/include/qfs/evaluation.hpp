#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qfs {

class ReportError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Class 1 (buggy) is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

double accuracy(const ConfusionMatrix& cm);
/// F1 of the positive class; 0 when precision + recall is 0.
double binary_f1(const ConfusionMatrix& cm);
/// Support-weighted mean of the per-class F1 scores.
double weighted_f1(const ConfusionMatrix& cm);
double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred);

enum class Variant { all_features, classical, remote };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct EvaluationReport {
    std::string dataset;
    Variant variant = Variant::all_features;
    /// Solver label; empty for the all-features baseline.
    std::string solver;
    std::size_t original_features = 0;
    std::size_t selected_features = 0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double binary_f1 = 0.0;
    std::optional<double> sampling_time_ms;
    std::uint64_t seed = 0;
    std::size_t repeat = 0;
    /// Set when the solver selected nothing and no classifier was trained.
    bool evaluation_skipped = false;
    std::string split_fingerprint;
    std::string config_hash;
    std::vector<std::string> selected_names;

    /// Throws ReportError when an invariant is broken.
    void validate() const;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

struct ReportInputs {
    std::string dataset;
    Variant variant = Variant::all_features;
    std::string solver;
    std::size_t original_features = 0;
    std::vector<std::string> selected_names;
    /// Empty when evaluation was skipped.
    std::span<const int> y_true;
    std::span<const int> y_pred;
    std::optional<double> sampling_time_ms;
    std::uint64_t seed = 0;
    std::size_t repeat = 0;
    std::string split_fingerprint;
    std::string config_hash;
    bool evaluation_skipped = false;
};

EvaluationReport build_report(const ReportInputs& in);

nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Column order: dataset, variant, original_features, selected_features, accuracy,
/// f1, sampling_time_ms, seed, then solver, repeat, evaluation_skipped, binary_f1,
/// split_fingerprint, config_hash, selected (';'-joined). Doubles are written at
/// round-trip precision.
std::string summary_csv(std::span<const EvaluationReport> reports);
std::vector<EvaluationReport> parse_summary_csv(std::string_view text);

/// One row per dataset (and repeat), one sampling-time column per solver label.
std::string timing_csv(std::span<const EvaluationReport> reports);

/// Feature-count table and ACC/F1 table; metrics to 2 decimals, best per row in bold.
std::string summary_markdown(std::span<const EvaluationReport> reports);

}  // namespace qfs
