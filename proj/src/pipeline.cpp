#include "qfs/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "qfs/random.hpp"
#include "qfs/util.hpp"

namespace qfs {

namespace {

std::string join_lines(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems) out += "\n  - " + p;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

std::string solver_label(const SolverConfig& s) {
    return std::visit([](const auto& c) { return c.label; }, s);
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    template <class T>
    void get(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
        if (!obj.is_object() || !obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            problems_.push_back(where + "." + key + " has the wrong type");
        }
    }

    template <class T>
    void get_opt(const nlohmann::json& obj, const char* key, std::optional<T>& out, const std::string& where) {
        if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return;
        T v{};
        get(obj, key, v, where);
        out = v;
    }

    void fail(std::string msg) { problems_.push_back(std::move(msg)); }

private:
    std::vector<std::string>& problems_;
};

SolverConfig parse_solver(const nlohmann::json& s, std::size_t idx, Reader& rd) {
    const std::string where = "solvers[" + std::to_string(idx) + "]";
    std::string type;
    rd.get(s, "type", type, where);
    if (type == "exhaustive") {
        ExhaustiveConfig c;
        rd.get(s, "label", c.label, where);
        return c;
    }
    if (type == "simulated_annealing") {
        AnnealConfig c;
        rd.get(s, "label", c.label, where);
        rd.get(s, "num_reads", c.num_reads, where);
        rd.get(s, "sweeps", c.sweeps, where);
        rd.get_opt(s, "beta_start", c.beta_start, where);
        rd.get_opt(s, "beta_end", c.beta_end, where);
        rd.get(s, "threads", c.threads, where);
        if (c.num_reads < 1) rd.fail(where + ".num_reads must be at least 1");
        if (c.sweeps < 1) rd.fail(where + ".sweeps must be at least 1");
        if (c.beta_start && !(*c.beta_start > 0.0)) rd.fail(where + ".beta_start must be positive");
        if (c.beta_start && c.beta_end && !(*c.beta_end > *c.beta_start)) {
            rd.fail(where + ".beta_end must exceed beta_start");
        }
        return c;
    }
    if (type == "remote") {
        RemoteSolverConfig c;
        rd.get(s, "label", c.label, where);
        auto& r = c.remote;
        rd.get(s, "base_url", r.base_url, where);
        rd.get_opt(s, "auth_token", r.auth_token, where);
        rd.get(s, "poll_interval_ms", r.poll_interval_ms, where);
        rd.get(s, "timeout_ms", r.timeout_ms, where);
        rd.get(s, "num_reads", r.num_reads, where);
        rd.get(s, "max_retries", r.max_retries, where);
        if (const char* env = std::getenv(kRemoteTokenEnv); env && *env) r.auth_token = env;
        try {
            r.validate();
        } catch (const std::invalid_argument& e) {
            rd.fail(where + ": " + e.what());
        }
        return c;
    }
    rd.fail(where + ".type must be one of exhaustive, simulated_annealing, remote (got '" + type + "')");
    return ExhaustiveConfig{};
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    std::vector<std::string> problems;
    Reader rd(problems);
    RunConfig cfg;
    if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});

    int version = 0;
    rd.get(doc, "schema_version", version, "config");
    if (version != kConfigSchemaVersion) {
        problems.push_back("schema_version must be " + std::to_string(kConfigSchemaVersion));
    }

    rd.get(doc, "seed", cfg.seed, "config");
    rd.get(doc, "test_fraction", cfg.test_fraction, "config");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        problems.push_back("test_fraction must lie strictly between 0 and 1");
    }

    if (!doc.contains("datasets") || !doc["datasets"].is_array() || doc["datasets"].empty()) {
        problems.push_back("at least one dataset is required");
    } else {
        std::size_t i = 0;
        for (const auto& d : doc["datasets"]) {
            const std::string where = "datasets[" + std::to_string(i++) + "]";
            DatasetEntry e;
            std::string path;
            std::string delimiter = ",";
            rd.get(d, "name", e.name, where);
            rd.get(d, "path", path, where);
            rd.get(d, "label_column", e.label_column, where);
            rd.get(d, "delimiter", delimiter, where);
            rd.get(d, "truthy_labels", e.csv.truthy_labels, where);
            if (e.name.empty()) problems.push_back(where + ".name is required");
            if (path.empty()) problems.push_back(where + ".path is required");
            if (delimiter.size() != 1) problems.push_back(where + ".delimiter must be one character");
            e.csv.delimiter = delimiter.empty() ? ',' : delimiter[0];
            e.path = path;
            if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
            if (std::ranges::any_of(cfg.datasets, [&](const auto& o) { return o.name == e.name; })) {
                problems.push_back(where + ".name '" + e.name + "' is not unique");
            }
            cfg.datasets.push_back(std::move(e));
        }
    }

    if (doc.contains("smote")) {
        const auto& s = doc["smote"];
        rd.get(s, "enabled", cfg.smote.enabled, "smote");
        rd.get(s, "k", cfg.smote.k, "smote");
        rd.get(s, "after_split", cfg.smote.after_split, "smote");
        if (cfg.smote.k < 1) problems.push_back("smote.k must be at least 1");
    }
    rd.get(doc, "independent_test_scaling", cfg.independent_test_scaling, "config");
    rd.get(doc, "mi_bins", cfg.mi_bins, "config");
    if (cfg.mi_bins < 2) problems.push_back("mi_bins must be at least 2");
    std::optional<std::string> cache;
    rd.get_opt(doc, "mi_cache_dir", cache, "config");
    if (cache) cfg.mi_cache_dir = std::filesystem::path(*cache).is_relative() && !base_dir.empty()
                                      ? base_dir / *cache
                                      : std::filesystem::path(*cache);

    if (doc.contains("weights")) {
        double alpha = cfg.weights.alpha();
        double beta = cfg.weights.beta();
        rd.get(doc["weights"], "alpha", alpha, "weights");
        rd.get(doc["weights"], "beta", beta, "weights");
        try {
            cfg.weights = MiQuboWeights(alpha, beta);
        } catch (const QuboError& e) {
            problems.push_back(std::string("weights: ") + e.what());
        }
    }

    if (!doc.contains("solvers") || !doc["solvers"].is_array() || doc["solvers"].empty()) {
        problems.push_back("at least one solver is required");
    } else {
        std::size_t i = 0;
        for (const auto& s : doc["solvers"]) {
            auto solver = parse_solver(s, i++, rd);
            auto label = solver_label(solver);
            if (std::ranges::any_of(cfg.solvers, [&](const auto& o) { return solver_label(o) == label; })) {
                problems.push_back("solver label '" + label + "' is not unique");
            }
            cfg.solvers.push_back(std::move(solver));
        }
    }

    if (doc.contains("svm")) {
        rd.get(doc["svm"], "c", cfg.svm.c, "svm");
        rd.get(doc["svm"], "epochs", cfg.svm.epochs, "svm");
        if (!(cfg.svm.c > 0.0)) problems.push_back("svm.c must be positive");
        if (cfg.svm.epochs < 1) problems.push_back("svm.epochs must be at least 1");
    }

    std::string out_dir = cfg.output_dir.string();
    rd.get(doc, "output_dir", out_dir, "config");
    cfg.output_dir = out_dir;
    if (cfg.output_dir.is_relative() && !base_dir.empty()) cfg.output_dir = base_dir / cfg.output_dir;
    rd.get_opt(doc, "run_id", cfg.run_id, "config");
    rd.get(doc, "repeats", cfg.repeats, "config");
    rd.get(doc, "workers", cfg.workers, "config");
    rd.get(doc, "write_datasets", cfg.write_datasets, "config");
    if (cfg.repeats < 1) problems.push_back("repeats must be at least 1");
    if (cfg.workers < 1) problems.push_back("workers must be at least 1");

    if (!problems.empty()) throw ConfigError(std::move(problems));

    Fnv1a h;
    h.update(doc.dump());
    cfg.config_hash = h.hex();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError({e.what()});
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    auto cfg = parse_config(doc, path.parent_path());
    Fnv1a h;
    h.update(text);
    cfg.config_hash = h.hex();
    return cfg;
}

std::vector<std::string> validate_config_file(const std::filesystem::path& path) {
    RunConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    std::vector<std::string> problems;
    for (const auto& d : cfg.datasets) {
        if (!std::filesystem::is_regular_file(d.path)) {
            problems.push_back("dataset '" + d.name + "': file not found: " + d.path.string());
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------
// Pipeline

std::uint64_t dataset_seed(const RunConfig& config, const std::string& name, std::size_t repeat) {
    auto s = derive_seed(config.seed, "dataset:" + name);
    return repeat == 0 ? s : derive_seed(s, repeat);
}

std::unique_ptr<Solver> make_solver(const SolverConfig& cfg, std::uint64_t seed) {
    return std::visit(
        [seed](const auto& c) -> std::unique_ptr<Solver> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ExhaustiveConfig>) {
                return std::make_unique<ExhaustiveSolver>();
            } else if constexpr (std::is_same_v<T, AnnealConfig>) {
                AnnealParams p;
                p.num_reads = c.num_reads;
                p.sweeps = c.sweeps;
                p.beta_start = c.beta_start;
                p.beta_end = c.beta_end;
                p.seed = derive_seed(seed, "solver:" + c.label);
                p.threads = c.threads;
                return std::make_unique<SimulatedAnnealingSolver>(p);
            } else {
                return std::make_unique<RemoteSolver>(c.remote, c.label);
            }
        },
        cfg);
}

namespace {

MiStatistics mi_with_cache(const CleanDataset& train, const RunConfig& config) {
    if (!config.mi_cache_dir) return build_mi_statistics(train, config.mi_bins);
    const auto file = *config.mi_cache_dir / (mi_cache_key(train, config.mi_bins) + ".json");
    if (std::filesystem::is_regular_file(file)) {
        try {
            auto mi = mi_statistics_from_json(nlohmann::json::parse(read_file(file)));
            if (mi.n == train.features()) return mi;
        } catch (const std::exception&) {
            // unreadable cache entries are recomputed
        }
    }
    auto mi = build_mi_statistics(train, config.mi_bins);
    write_file_atomic(file, to_json(mi).dump());
    return mi;
}

}  // namespace

PreparedData prepare_dataset(const CleanDataset& cleaned, const RunConfig& config,
                             std::uint64_t seed) {
    PreparedData p;
    p.cleaned = cleaned;
    CleanDataset pool = cleaned;
    if (config.smote.enabled && !config.smote.after_split) {
        pool = smote_balance(pool, config.smote.k, derive_seed(seed, "smote"));
    }
    p.split = stratified_split(pool, config.test_fraction, derive_seed(seed, "split"));
    CleanDataset train = p.split.train;
    if (config.smote.enabled && config.smote.after_split) {
        train = smote_balance(train, config.smote.k, derive_seed(seed, "smote"));
    }
    const auto params = fit_scaler(train);
    p.train = apply_scaler(params, train);
    p.test = config.independent_test_scaling ? apply_scaler(fit_scaler(p.split.test), p.split.test)
                                             : apply_scaler(params, p.split.test);
    p.mi = mi_with_cache(p.train, config);
    p.qubo = build_mi_qubo(p.mi, config.weights);
    return p;
}

namespace {

struct DatasetRun {
    std::vector<EvaluationReport> reports;
    std::vector<DatasetFailure> failures;
};

std::string safe_name(std::string s) {
    for (auto& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    return s;
}

DatasetRun run_dataset(const DatasetEntry& entry, std::size_t repeat, const RunConfig& config,
                       const std::filesystem::path& run_dir) {
    DatasetRun out;
    const auto seed = dataset_seed(config, entry.name, repeat);
    auto dir = run_dir / safe_name(entry.name);
    if (repeat > 0) dir /= "repeat_" + std::to_string(repeat);
    try {
        const auto cleaned = clean(load_csv(entry.path, entry.label_column, entry.csv));
        auto prep = prepare_dataset(cleaned, config, seed);
        const auto fingerprint = prep.split.fingerprint();
        const auto original = prep.train.features();

        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "mi.json", to_json(prep.mi).dump(2));
        write_file_atomic(dir / "qubo.json", to_json(prep.qubo).dump(2));
        if (config.write_datasets) {
            write_csv(prep.train, dir / "train.csv");
            write_csv(prep.test, dir / "test.csv");
        }

        SvmParams svm = config.svm;
        svm.seed = derive_seed(seed, "svm");

        // Baseline on every feature.
        {
            auto model = fit_svm(prep.train.x, prep.train.y, svm);
            model.feature_names = prep.train.feature_names;
            auto pred = predict(model, prep.test.x);
            write_file_atomic(dir / "model_all_features.json", to_json(model).dump(2));
            ReportInputs in;
            in.dataset = entry.name;
            in.variant = Variant::all_features;
            in.original_features = original;
            in.selected_names = prep.train.feature_names;
            in.y_true = prep.test.y;
            in.y_pred = pred;
            in.seed = seed;
            in.repeat = repeat;
            in.split_fingerprint = fingerprint;
            in.config_hash = config.config_hash;
            out.reports.push_back(build_report(in));
        }

        // Solver variants run one after another so timings are uncontended.
        for (const auto& scfg : config.solvers) {
            const auto label = solver_label(scfg);
            SolverResult result;
            try {
                result = make_solver(scfg, seed)->solve(prep.qubo);
                result.check(prep.qubo);
            } catch (const std::exception& e) {
                out.failures.push_back(DatasetFailure{entry.name, label, e.what()});
                continue;
            }
            write_file_atomic(dir / ("solver_" + safe_name(label) + ".json"), to_json(result).dump(2));

            const auto selected = result.best.selected_indices();
            ReportInputs in;
            in.dataset = entry.name;
            in.variant = std::holds_alternative<RemoteSolverConfig>(scfg) ? Variant::remote : Variant::classical;
            in.solver = label;
            in.original_features = original;
            for (auto i : selected) in.selected_names.push_back(prep.train.feature_names[i]);
            in.sampling_time_ms = result.sampling_time_ms;
            in.seed = seed;
            in.repeat = repeat;
            in.split_fingerprint = fingerprint;
            in.config_hash = config.config_hash;

            std::vector<int> pred;
            if (selected.empty()) {
                in.evaluation_skipped = true;
            } else {
                auto train_sel = prep.train.select_features(selected);
                auto test_sel = prep.test.select_features(selected);
                auto model = fit_svm(train_sel.x, train_sel.y, svm);
                model.feature_names = train_sel.feature_names;
                pred = predict(model, test_sel.x);
                write_file_atomic(dir / ("model_" + safe_name(label) + ".json"), to_json(model).dump(2));
                in.y_true = prep.test.y;
                in.y_pred = pred;
            }
            out.reports.push_back(build_report(in));
        }
    } catch (const std::exception& e) {
        out.reports.clear();
        out.failures.push_back(DatasetFailure{entry.name, {}, e.what()});
    }
    return out;
}

std::string utc_now(const char* fmt) {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, fmt);
    return ss.str();
}

}  // namespace

RunOutcome run_experiment(const RunConfig& config) {
    RunOutcome outcome;
    outcome.run_id = config.run_id.value_or(utc_now("%Y%m%dT%H%M%SZ") + "-" +
                                            config.config_hash.substr(0, 8));
    outcome.run_dir = config.output_dir / outcome.run_id;
    std::filesystem::create_directories(outcome.run_dir);

    struct Task {
        const DatasetEntry* entry;
        std::size_t repeat;
    };
    std::vector<Task> tasks;
    for (const auto& d : config.datasets) {
        for (std::size_t r = 0; r < config.repeats; ++r) tasks.push_back({&d, r});
    }
    std::vector<DatasetRun> runs(tasks.size());
    {
        std::mutex m;
        std::size_t next = 0;
        auto worker = [&] {
            for (;;) {
                std::size_t i = 0;
                {
                    std::lock_guard lock(m);
                    if (next >= tasks.size()) return;
                    i = next++;
                }
                runs[i] = run_dataset(*tasks[i].entry, tasks[i].repeat, config, outcome.run_dir);
            }
        };
        const auto n = std::min(config.workers, tasks.size());
        if (n <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        }
    }

    nlohmann::json errors = nlohmann::json::array();
    for (auto& run : runs) {
        for (auto& f : run.failures) {
            nlohmann::json e = {{"dataset", f.dataset}, {"error", f.error}};
            if (!f.solver.empty()) e["solver"] = f.solver;
            errors.push_back(std::move(e));
            outcome.failures.push_back(std::move(f));
        }
        for (auto& r : run.reports) outcome.reports.push_back(std::move(r));
    }

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : outcome.reports) rows.push_back(to_json(r));
    outcome.summary = {{"schema_version", kConfigSchemaVersion},
                       {"run_id", outcome.run_id},
                       {"created_at", utc_now("%Y-%m-%dT%H:%M:%SZ")},
                       {"config_hash", config.config_hash},
                       {"reports", std::move(rows)},
                       {"errors", std::move(errors)}};

    write_file_atomic(outcome.run_dir / "summary.csv", summary_csv(outcome.reports));
    write_file_atomic(outcome.run_dir / "summary.json", outcome.summary.dump(2));
    write_file_atomic(outcome.run_dir / "summary.md", summary_markdown(outcome.reports));
    write_file_atomic(outcome.run_dir / "timing.csv", timing_csv(outcome.reports));

    outcome.exit_code = outcome.failures.empty() ? 0 : 1;
    return outcome;
}

nlohmann::json canonical_summary(nlohmann::json summary) {
    summary.erase("run_id");
    summary.erase("created_at");
    if (summary.contains("reports")) {
        for (auto& r : summary["reports"]) r.erase("sampling_time_ms");
    }
    return summary;
}

}  // namespace qfs
