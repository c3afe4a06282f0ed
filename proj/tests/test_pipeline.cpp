#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qfs/pipeline.hpp"
#include "qfs/synthetic.hpp"
#include "qfs/util.hpp"

using namespace qfs;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("qfs-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_synthetic(const fs::path& dir, const std::string& name, std::uint64_t seed,
                         std::size_t samples = 300) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.samples = samples;
    auto path = dir / (name + ".csv");
    write_csv(generate_synthetic(spec), path);
    return path;
}

nlohmann::json base_config(const fs::path& dir, const std::vector<std::pair<std::string, fs::path>>& datasets) {
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& [name, path] : datasets) ds.push_back({{"name", name}, {"path", path.string()}});
    return {{"schema_version", 1},
            {"seed", 42},
            {"datasets", ds},
            {"solvers", {{{"type", "exhaustive"}}, {{"type", "simulated_annealing"}, {"sweeps", 200}}}},
            {"svm", {{"epochs", 30}}},
            {"output_dir", (dir / "reports").string()}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc, const std::string& name = "config.json") {
    auto p = dir / name;
    write_file_atomic(p, doc.dump(2));
    return p;
}

bool any_contains(const std::vector<std::string>& msgs, const std::string& needle) {
    for (const auto& m : msgs)
        if (m.find(needle) != std::string::npos) return true;
    return false;
}

int run_cli(const std::string& args, const fs::path& out_file = {}) {
    std::string cmd = std::string(QFS_CLI_PATH) + " " + args;
    cmd += out_file.empty() ? " >/dev/null 2>&1" : " >" + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& text) { return std::count(text.begin(), text.end(), '\n'); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, DefaultsMirrorExperimentalSetup) {
    nlohmann::json doc = {{"schema_version", 1},
                          {"datasets", {{{"name", "a"}, {"path", "a.csv"}}}},
                          {"solvers", {{{"type", "simulated_annealing"}}}}};
    auto cfg = parse_config(doc, "/data");
    EXPECT_EQ(cfg.test_fraction, 0.2);
    EXPECT_EQ(cfg.weights.alpha(), 0.98);
    EXPECT_EQ(cfg.weights.beta(), 0.02);
    EXPECT_EQ(cfg.mi_bins, 10u);
    EXPECT_TRUE(cfg.smote.enabled);
    EXPECT_EQ(cfg.datasets[0].path, fs::path("/data/a.csv"));
    EXPECT_EQ(cfg.datasets[0].label_column, "bug");
    const auto& sa = std::get<AnnealConfig>(cfg.solvers[0]);
    EXPECT_EQ(sa.num_reads, 100u);
    EXPECT_EQ(sa.sweeps, 1000u);
    EXPECT_FALSE(cfg.config_hash.empty());
}

TEST(Config, WeightsMustSumToOne) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "d", 1, 100);
    auto doc = base_config(tmp.path(), {{"d", csv}});
    doc["weights"] = {{"alpha", 0.7}, {"beta", 0.2}};
    auto problems = validate_config_file(write_config(tmp.path(), doc));
    ASSERT_FALSE(problems.empty());
    EXPECT_TRUE(any_contains(problems, "alpha + beta"));
}

TEST(Config, MissingDatasetFileIsListed) {
    TempDir tmp;
    auto doc = base_config(tmp.path(), {{"gone", tmp.path() / "nowhere" / "gone.csv"}});
    auto problems = validate_config_file(write_config(tmp.path(), doc));
    ASSERT_EQ(problems.size(), 1u);
    EXPECT_TRUE(any_contains(problems, (tmp.path() / "nowhere" / "gone.csv").string()));
}

TEST(Config, EveryProblemIsReported) {
    nlohmann::json doc = {{"schema_version", 3},
                          {"test_fraction", 1.5},
                          {"datasets", nlohmann::json::array()},
                          {"solvers", {{{"type", "quantum"}}}},
                          {"mi_bins", 1}};
    try {
        parse_config(doc);
        FAIL();
    } catch (const ConfigError& e) {
        const auto& p = e.problems();
        EXPECT_TRUE(any_contains(p, "schema_version"));
        EXPECT_TRUE(any_contains(p, "test_fraction"));
        EXPECT_TRUE(any_contains(p, "dataset"));
        EXPECT_TRUE(any_contains(p, "type"));
        EXPECT_TRUE(any_contains(p, "mi_bins"));
    }
}

TEST(Config, WrongTypesAreReported) {
    nlohmann::json doc = {{"schema_version", 1},
                          {"seed", "abc"},
                          {"datasets", {{{"name", "a"}, {"path", "a.csv"}}}},
                          {"solvers", {{{"type", "simulated_annealing"}, {"num_reads", -3}}}}};
    EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, DuplicateSolverLabelsRejected) {
    nlohmann::json doc = {{"schema_version", 1},
                          {"datasets", {{{"name", "a"}, {"path", "a.csv"}}}},
                          {"solvers", {{{"type", "exhaustive"}}, {{"type", "exhaustive"}}}}};
    EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, EnvironmentOverridesRemoteToken) {
    nlohmann::json doc = {{"schema_version", 1},
                          {"datasets", {{{"name", "a"}, {"path", "a.csv"}}}},
                          {"solvers", {{{"type", "remote"}, {"base_url", "http://127.0.0.1:9"}, {"auth_token", "file"}}}}};
    ::unsetenv(kRemoteTokenEnv);
    EXPECT_EQ(std::get<RemoteSolverConfig>(parse_config(doc).solvers[0]).remote.auth_token, "file");
    ::setenv(kRemoteTokenEnv, "from-env", 1);
    EXPECT_EQ(std::get<RemoteSolverConfig>(parse_config(doc).solvers[0]).remote.auth_token, "from-env");
    ::unsetenv(kRemoteTokenEnv);
}

TEST(Config, HashFollowsConfigBytes) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "d", 1, 100);
    auto doc = base_config(tmp.path(), {{"d", csv}});
    auto a = load_config(write_config(tmp.path(), doc, "a.json"));
    auto b = load_config(write_config(tmp.path(), doc, "b.json"));
    EXPECT_EQ(a.config_hash, b.config_hash);
    doc["seed"] = 43;
    EXPECT_NE(load_config(write_config(tmp.path(), doc, "c.json")).config_hash, a.config_hash);
}

// ---------------------------------------------------------------------------
// Runs

TEST(Run, OneDatasetTwoSolversGivesThreeRows) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "synthetic", 3);
    auto cfg = load_config(write_config(tmp.path(), base_config(tmp.path(), {{"synthetic", csv}})));
    cfg.run_id = "r1";
    auto out = run_experiment(cfg);
    ASSERT_EQ(out.exit_code, 0);
    ASSERT_EQ(out.reports.size(), 3u);
    EXPECT_EQ(count_lines(read_file(out.run_dir / "summary.csv")), 4u);
    for (const char* f : {"summary.json", "summary.md", "timing.csv"}) EXPECT_TRUE(fs::exists(out.run_dir / f)) << f;
    for (const char* f : {"mi.json", "qubo.json", "model_all_features.json", "solver_exhaustive.json",
                          "solver_simulated_annealing.json"}) {
        EXPECT_TRUE(fs::exists(out.run_dir / "synthetic" / f)) << f;
    }
    EXPECT_EQ(out.reports[0].variant, Variant::all_features);
    EXPECT_FALSE(out.reports[0].sampling_time_ms);
    EXPECT_EQ(out.reports[1].solver, "exhaustive");
    EXPECT_TRUE(out.reports[1].sampling_time_ms);
    EXPECT_EQ(parse_summary_csv(read_file(out.run_dir / "summary.csv")), out.reports);
}

TEST(Run, EveryVariantSharesTheTestSplit) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 4);
    auto cfg = load_config(write_config(tmp.path(), base_config(tmp.path(), {{"s", csv}})));
    auto out = run_experiment(cfg);
    std::set<std::string> prints;
    for (const auto& r : out.reports) prints.insert(r.split_fingerprint);
    EXPECT_EQ(prints.size(), 1u);
}

TEST(Run, EmptySelectionSkipsEvaluation) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 5, 200);
    auto doc = base_config(tmp.path(), {{"s", csv}});
    doc["weights"] = {{"alpha", 0.0}, {"beta", 1.0}};
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    ASSERT_EQ(out.exit_code, 0);
    ASSERT_EQ(out.reports.size(), 3u);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_EQ(out.reports[i].selected_features, 0u);
        EXPECT_TRUE(out.reports[i].evaluation_skipped);
    }
    EXPECT_FALSE(out.reports[0].evaluation_skipped);
    EXPECT_NE(read_file(out.run_dir / "summary.csv").find(",true,"), std::string::npos);
}

TEST(Run, FailingDatasetDoesNotStopOthers) {
    TempDir tmp;
    auto good = write_synthetic(tmp.path(), "good", 6, 200);
    auto bad = tmp.path() / "bad.csv";
    write_file_atomic(bad, "a,bug\n1,0\n2,7\n");
    auto doc = base_config(tmp.path(), {{"bad", bad}, {"good", good}});
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    EXPECT_EQ(out.exit_code, 1);
    ASSERT_EQ(out.failures.size(), 1u);
    EXPECT_EQ(out.failures[0].dataset, "bad");
    EXPECT_EQ(out.reports.size(), 3u);
    EXPECT_EQ(out.summary["errors"].size(), 1u);
}

TEST(Run, RemoteFailureIsReportedPerSolver) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 7, 200);
    auto doc = base_config(tmp.path(), {{"s", csv}});
    doc["solvers"].push_back({{"type", "remote"},
                              {"base_url", "http://127.0.0.1:1"},
                              {"poll_interval_ms", 5},
                              {"timeout_ms", 200},
                              {"max_retries", 0}});
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    EXPECT_EQ(out.exit_code, 1);
    ASSERT_EQ(out.failures.size(), 1u);
    EXPECT_EQ(out.failures[0].solver, "remote");
    EXPECT_EQ(out.reports.size(), 3u);
}

TEST(Run, RemoteSolverThroughMockServer) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 8, 200);
    MockAnnealerServer server([](const QuboProblem& p, std::size_t reads) {
        return solve_simulated_annealing(p, reads, default_schedule(p, 200), 5);
    });
    server.start();
    auto doc = base_config(tmp.path(), {{"s", csv}});
    doc["solvers"] = {{{"type", "remote"}, {"base_url", server.base_url()}, {"poll_interval_ms", 10}}};
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    ASSERT_EQ(out.exit_code, 0) << (out.failures.empty() ? "" : out.failures[0].error);
    ASSERT_EQ(out.reports.size(), 2u);
    EXPECT_EQ(out.reports[1].variant, Variant::remote);
    EXPECT_EQ(read_file(out.run_dir / "timing.csv").substr(0, 16), "Datasets,remote\n");
}

TEST(Run, RerunIsIdenticalApartFromRunMetadata) {
    TempDir tmp;
    auto a = write_synthetic(tmp.path(), "a", 9, 200);
    auto b = write_synthetic(tmp.path(), "b", 10, 200);
    auto doc = base_config(tmp.path(), {{"a", a}, {"b", b}});
    doc["workers"] = 2;
    auto cfg = load_config(write_config(tmp.path(), doc));
    cfg.run_id = "first";
    auto r1 = run_experiment(cfg);
    cfg.run_id = "second";
    auto r2 = run_experiment(cfg);
    EXPECT_EQ(canonical_summary(r1.summary).dump(), canonical_summary(r2.summary).dump());
    auto j1 = canonical_summary(nlohmann::json::parse(read_file(r1.run_dir / "summary.json")));
    auto j2 = canonical_summary(nlohmann::json::parse(read_file(r2.run_dir / "summary.json")));
    EXPECT_EQ(j1, j2);
    EXPECT_EQ(read_file(r1.run_dir / "a" / "qubo.json"), read_file(r2.run_dir / "a" / "qubo.json"));
}

TEST(Run, RepeatsEmitRowsPerRepeat) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 11, 200);
    auto doc = base_config(tmp.path(), {{"s", csv}});
    doc["repeats"] = 2;
    doc["solvers"] = {{{"type", "exhaustive"}}};
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    ASSERT_EQ(out.reports.size(), 4u);
    EXPECT_EQ(out.reports[2].repeat, 1u);
    EXPECT_NE(out.reports[0].split_fingerprint, out.reports[2].split_fingerprint);
    EXPECT_EQ(count_lines(read_file(out.run_dir / "timing.csv")), 3u);
}

TEST(Run, MiCacheIsReused) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "s", 12, 200);
    auto doc = base_config(tmp.path(), {{"s", csv}});
    doc["mi_cache_dir"] = (tmp.path() / "cache").string();
    doc["solvers"] = {{{"type", "exhaustive"}}};
    auto cfg = load_config(write_config(tmp.path(), doc));
    auto first = run_experiment(cfg);
    ASSERT_EQ(std::distance(fs::directory_iterator(tmp.path() / "cache"), fs::directory_iterator{}), 1);
    auto second = run_experiment(cfg);
    EXPECT_EQ(canonical_summary(first.summary).dump(), canonical_summary(second.summary).dump());
}

TEST(Run, PlantedDuplicatesNeverSelectedTogether) {
    TempDir tmp;
    SyntheticSpec spec;
    spec.informative = 8;
    spec.duplicates = 4;
    spec.noise = 4;
    spec.samples = 1000;
    spec.seed = 13;
    auto path = tmp.path() / "planted.csv";
    write_csv(generate_synthetic(spec), path);
    auto doc = base_config(tmp.path(), {{"planted", path}});
    auto out = run_experiment(load_config(write_config(tmp.path(), doc)));
    ASSERT_EQ(out.exit_code, 0);
    for (const auto& r : out.reports) {
        if (r.variant == Variant::all_features) continue;
        std::set<std::string> names(r.selected_names.begin(), r.selected_names.end());
        for (std::size_t k = 0; k < spec.duplicates; ++k) {
            EXPECT_FALSE(names.count("inf_" + std::to_string(k)) && names.count("dup_" + std::to_string(k)))
                << r.solver << " kept both copies of feature " << k;
        }
        EXPECT_LT(r.selected_features, r.original_features);
    }
}

TEST(Prepare, SmoteAfterSplitKeepsTestUntouched) {
    SyntheticSpec spec;
    spec.samples = 200;
    spec.seed = 14;
    auto data = generate_synthetic(spec);
    RunConfig cfg;
    cfg.smote.after_split = true;
    auto p = prepare_dataset(data, cfg, 1);
    const auto test = p.split.test.class_counts();
    EXPECT_NE(test[0], test[1]);
    EXPECT_EQ(p.train.class_counts()[0], p.train.class_counts()[1]);
    for (const auto& row : p.train.x)
        for (double v : row) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, GenerateSyntheticWritesTwentyFeatureColumns) {
    TempDir tmp;
    auto out = tmp.path() / "gen.csv";
    ASSERT_EQ(run_cli("generate-synthetic --informative 10 --duplicates 5 --noise 5 --samples 1000 --imbalance 4 "
                      "--seed 1 -o " + out.string()),
              0);
    auto raw = load_csv(out, "bug");
    EXPECT_EQ(raw.feature_count(), 20u);
    EXPECT_EQ(raw.rows.size(), 1000u);
    auto d = clean(raw);
    EXPECT_EQ(d.class_counts(), (ClassCounts{800, 200}));
}

TEST(Cli, ValidateExitCodes) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "d", 1, 100);
    auto doc = base_config(tmp.path(), {{"d", csv}});
    EXPECT_EQ(run_cli("validate " + write_config(tmp.path(), doc, "ok.json").string()), 0);
    doc["weights"] = {{"alpha", 0.5}, {"beta", 0.4}};
    auto log = tmp.path() / "log.txt";
    EXPECT_EQ(run_cli("validate " + write_config(tmp.path(), doc, "bad.json").string(), log), 2);
    EXPECT_NE(read_file(log).find("alpha + beta"), std::string::npos);
}

TEST(Cli, RunExitCodes) {
    TempDir tmp;
    auto csv = write_synthetic(tmp.path(), "d", 2, 150);
    auto doc = base_config(tmp.path(), {{"d", csv}});
    doc["run_id"] = "cli";
    EXPECT_EQ(run_cli("run " + write_config(tmp.path(), doc, "ok.json").string()), 0);
    EXPECT_TRUE(fs::exists(tmp.path() / "reports" / "cli" / "summary.csv"));
    doc["datasets"][0]["path"] = (tmp.path() / "missing.csv").string();
    EXPECT_EQ(run_cli("run " + write_config(tmp.path(), doc, "fail.json").string()), 1);
    EXPECT_EQ(run_cli("run " + (tmp.path() / "no-such-config.json").string()), 2);
}

TEST(Cli, SolveSubcommand) {
    TempDir tmp;
    QuboProblem p(2);
    p.set_linear(0, -1);
    p.set_linear(1, -1);
    p.set_quadratic(0, 1, 3);
    write_file_atomic(tmp.path() / "q.json", to_json(p).dump());
    auto out = tmp.path() / "r.json";
    ASSERT_EQ(run_cli("solve " + (tmp.path() / "q.json").string() + " --solver exhaustive -o " + out.string()), 0);
    auto r = solver_result_from_json(nlohmann::json::parse(read_file(out)));
    EXPECT_EQ(r.best, SubsetVector({1, 0}));
    ASSERT_EQ(run_cli("solve " + (tmp.path() / "q.json").string() + " --num-reads 7 --sweeps 50 -o " + out.string()), 0);
    EXPECT_EQ(solver_result_from_json(nlohmann::json::parse(read_file(out))).num_reads, 7u);
}
