#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qfs/annealer_client.hpp"
#include "qfs/dataset.hpp"
#include "qfs/evaluation.hpp"
#include "qfs/mutual_info.hpp"
#include "qfs/qubo.hpp"
#include "qfs/solvers.hpp"
#include "qfs/svm.hpp"

namespace qfs {

inline constexpr int kConfigSchemaVersion = 1;

/// Name of the environment variable that overrides every remote solver's token.
inline constexpr const char* kRemoteTokenEnv = "QFS_REMOTE_TOKEN";

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct DatasetEntry {
    std::string name;
    std::filesystem::path path;
    std::string label_column = "bug";
    CsvOptions csv;
};

struct SmoteConfig {
    bool enabled = true;
    std::size_t k = 5;
    bool after_split = false;
};

struct ExhaustiveConfig {
    std::string label = "exhaustive";
};

struct AnnealConfig {
    std::string label = "simulated_annealing";
    std::size_t num_reads = 100;
    std::size_t sweeps = kDefaultSweeps;
    std::optional<double> beta_start;
    std::optional<double> beta_end;
    unsigned threads = 1;
};

struct RemoteSolverConfig {
    std::string label = "remote";
    RemoteConfig remote;
};

using SolverConfig = std::variant<ExhaustiveConfig, AnnealConfig, RemoteSolverConfig>;

std::string solver_label(const SolverConfig& s);

struct RunConfig {
    std::vector<DatasetEntry> datasets;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    SmoteConfig smote;
    bool independent_test_scaling = false;
    std::size_t mi_bins = kDefaultMiBins;
    std::optional<std::filesystem::path> mi_cache_dir;
    MiQuboWeights weights;
    std::vector<SolverConfig> solvers;
    SvmParams svm;
    std::filesystem::path output_dir = "reports";
    std::optional<std::string> run_id;
    std::size_t repeats = 1;
    std::size_t workers = 1;
    bool write_datasets = false;
    /// Hash of the configuration text; stamped on every report row.
    std::string config_hash;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws ConfigError listing every problem found.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Static checks without running anything (parse, weights, files present).
/// Returns one message per problem; empty means valid.
std::vector<std::string> validate_config_file(const std::filesystem::path& path);

struct DatasetFailure {
    std::string dataset;
    /// Empty when the dataset itself failed; otherwise the solver whose variant was lost.
    std::string solver;
    std::string error;
};

struct RunOutcome {
    /// 0 success, 1 at least one dataset or solver failed.
    int exit_code = 0;
    std::string run_id;
    std::filesystem::path run_dir;
    std::vector<EvaluationReport> reports;
    std::vector<DatasetFailure> failures;
    nlohmann::json summary;
};

/// Runs every dataset through clean -> balance -> split -> scale -> MI -> QUBO ->
/// solvers -> SVM, plus the all-features baseline, and writes the report bundle.
RunOutcome run_experiment(const RunConfig& config);

/// summary.json with run_id, created_at and sampling times removed.
nlohmann::json canonical_summary(nlohmann::json summary);

/// Everything the pipeline computes for one dataset before reporting.
struct PreparedData {
    CleanDataset cleaned;
    SplitPair split;
    CleanDataset train;  // normalized
    CleanDataset test;   // normalized
    MiStatistics mi;
    QuboProblem qubo;
};

PreparedData prepare_dataset(const CleanDataset& cleaned, const RunConfig& config,
                             std::uint64_t dataset_seed);

std::uint64_t dataset_seed(const RunConfig& config, const std::string& name, std::size_t repeat);

/// Builds the solver described by `cfg`, seeded for one dataset.
std::unique_ptr<Solver> make_solver(const SolverConfig& cfg, std::uint64_t seed);

}  // namespace qfs
