// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"
#include "qfs/annealer_client.hpp"
#include "qfs/dataset.hpp"
#include "qfs/evaluation.hpp"
#include "qfs/pipeline.hpp"
#include "qfs/qubo.hpp"
#include "qfs/random.hpp"
#include "qfs/solvers.hpp"
#include "qfs/synthetic.hpp"
#include "qfs/util.hpp"
#include "test_support.hpp"

using namespace qfs;
using namespace qfs::testing;
namespace fs = std::filesystem;

namespace {

const WarningSink kQuiet = [](std::string_view) {};

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("qfs-accept-" + std::to_string(std::random_device{}()));
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

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SyntheticSpec planted_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.informative = 10;
    spec.duplicates = 5;
    spec.noise = 5;
    spec.samples = 1000;
    spec.seed = seed;
    return spec;
}

/// (informative index, duplicate index) for every dup_k column present.
std::vector<std::pair<std::size_t, std::size_t>> duplicate_pairs(const CleanDataset& d) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < d.features(); ++j) pos[d.feature_names[j]] = j;
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [name, j] : pos) {
        if (name.rfind("dup_", 0) != 0) continue;
        auto it = pos.find("inf_" + name.substr(4));
        if (it != pos.end()) out.emplace_back(it->second, j);
    }
    return out;
}

BackingSolver annealer(std::uint64_t seed, std::size_t sweeps = kDefaultSweeps) {
    return [seed, sweeps](const QuboProblem& p, std::size_t reads) {
        return solve_simulated_annealing(p, reads, default_schedule(p, sweeps, kQuiet), seed);
    };
}

RemoteConfig client_config(const MockAnnealerServer& server, std::size_t reads) {
    RemoteConfig cfg;
    cfg.base_url = server.base_url();
    cfg.poll_interval_ms = 10;
    cfg.timeout_ms = 60000;
    cfg.num_reads = reads;
    return cfg;
}

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
    const std::size_t instances = 100;
    std::mt19937_64 gen(2024);
    std::vector<QuboProblem> problems;
    for (std::size_t k = 0; k < instances; ++k) problems.push_back(build_mi_qubo(random_mi(12, gen), {}));

    auto success = [&](bool polish, double& seconds) {
        std::size_t hits = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t k = 0; k < instances; ++k) {
            auto sched = default_schedule(problems[k], 1000, kQuiet);
            sched.polish = polish;
            auto sa = solve_simulated_annealing(problems[k], 100, sched, derive_seed(11, k));
            auto ex = solve_exhaustive(problems[k]);
            if (sa.best == ex.best && sa.best_energy == ex.best_energy) ++hits;
        }
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return hits;
    };
    double secs = 0, secs_raw = 0;
    const auto hits = success(true, secs);
    const auto hits_raw = success(false, secs_raw);
    return {hits >= 95 && secs < 30.0,
            fmt("SA optimum on %zu/100 instances in %.2f s (without end-of-read polish: %zu/100)",
                hits, secs, hits_raw)};
}

Verdict limit_cases() {
    MockAnnealerServer server(annealer(5));
    server.start();
    RemoteSolver remote(client_config(server, 32));
    ExhaustiveSolver exhaustive;
    SimulatedAnnealingSolver sa(AnnealParams{.num_reads = 32, .seed = 5});
    const std::vector<const Solver*> backends{&exhaustive, &sa, &remote};

    std::mt19937_64 gen(77);
    std::size_t checks = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 8 + trial;
        auto mi = random_mi(n, gen);
        for (std::size_t i = 0; i < n; i += 3) mi.target_mi[i] = 0.0;
        auto only_target = build_mi_qubo(mi, MiQuboWeights(1.0, 0.0));
        auto only_pair = build_mi_qubo(mi, MiQuboWeights(0.0, 1.0));
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < n; ++i)
            if (mi.target_mi[i] > 0.0) expected.push_back(i);
        for (const auto* s : backends) {
            auto r = s->solve(only_target);
            if (r.best.selected_indices() != expected)
                return {false, fmt("beta = 0: %s selected a different set (trial %d)", s->name().c_str(), trial)};
            auto z = s->solve(only_pair);
            if (z.best_energy != 0.0)
                return {false, fmt("alpha = 0: %s best energy %.17g (trial %d)", s->name().c_str(), z.best_energy, trial)};
            checks += 2;
        }
    }
    return {true, fmt("%zu exact checks across exhaustive, simulated annealing and remote", checks)};
}

Verdict planted_redundancy() {
    std::size_t violations = 0, agree = 0;
    const std::size_t seeds = 20;
    for (std::size_t s = 1; s <= seeds; ++s) {
        auto data = generate_synthetic(planted_spec(s));
        std::vector<std::size_t> cols(16);
        for (std::size_t j = 0; j < 16; ++j) cols[j] = j;
        auto trunc = data.select_features(cols);
        RunConfig cfg;
        auto prep = prepare_dataset(trunc, cfg, dataset_seed(cfg, "planted", s));
        auto ex = solve_exhaustive(prep.qubo);
        for (auto [a, b] : duplicate_pairs(trunc))
            if (ex.best[a] && ex.best[b]) ++violations;
        auto sa = solve_simulated_annealing(prep.qubo, 100, default_schedule(prep.qubo, kDefaultSweeps, kQuiet),
                                            derive_seed(s, 3));
        if (sa.best == ex.best) ++agree;
    }
    return {violations == 0 && agree * 100 >= 95 * seeds,
            fmt("duplicate pairs kept by exhaustive: %zu; SA agrees on %zu/%zu seeds", violations, agree, seeds)};
}

struct PlantedRuns {
    std::vector<EvaluationReport> baseline;
    std::vector<EvaluationReport> selection;
    std::string error;
};

const PlantedRuns& planted_runs() {
    static const PlantedRuns runs = [] {
        PlantedRuns out;
        try {
            TempDir tmp;
            for (std::uint64_t s = 1; s <= 20; ++s) {
                auto csv = tmp.path() / ("planted_" + std::to_string(s) + ".csv");
                write_csv(generate_synthetic(planted_spec(s)), csv);
                RunConfig cfg;
                cfg.seed = s;
                cfg.datasets.push_back({.name = "planted", .path = csv});
                cfg.solvers = {AnnealConfig{}};
                cfg.output_dir = tmp.path() / "reports";
                cfg.run_id = "seed" + std::to_string(s);
                cfg.config_hash = "acceptance";
                auto outcome = run_experiment(cfg);
                if (!outcome.failures.empty()) throw std::runtime_error(outcome.failures.front().error);
                for (const auto& r : outcome.reports)
                    (r.variant == Variant::all_features ? out.baseline : out.selection).push_back(r);
            }
            if (out.baseline.size() != 20 || out.selection.size() != 20)
                throw std::runtime_error("unexpected report count");
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        return out;
    }();
    return runs;
}

Verdict cardinality_reduction() {
    const auto& runs = planted_runs();
    if (!runs.error.empty()) return {false, runs.error};
    std::size_t reduced = 0, lo = 1000, hi = 0;
    for (const auto& r : runs.selection) {
        if (r.selected_features < r.original_features) ++reduced;
        lo = std::min(lo, r.selected_features);
        hi = std::max(hi, r.selected_features);
    }
    return {reduced == runs.selection.size(),
            fmt("SA kept fewer than 20 features on %zu/%zu seeds (kept %zu..%zu)", reduced,
                runs.selection.size(), lo, hi)};
}

Verdict metric_correctness() {
    std::mt19937_64 gen(55);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t m = 1 + gen() % 300;
        const double p1 = (t % 10 == 0) ? 0.0 : std::uniform_real_distribution<double>(0.05, 0.95)(gen);
        std::bernoulli_distribution truth(p1), pred(0.5);
        std::vector<int> y(m), yhat(m);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = truth(gen);
            yhat[i] = (t % 7 == 0) ? y[i] : pred(gen);
        }
        // Independent recomputation from raw confusion counts.
        double count[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t i = 0; i < m; ++i) count[y[i]][yhat[i]] += 1;
        const double acc = (count[0][0] + count[1][1]) / static_cast<double>(m);
        double wf1 = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double tp = count[c][c];
            const double support = count[c][0] + count[c][1];
            const double predicted = count[0][c] + count[1][c];
            const double prec = predicted > 0 ? tp / predicted : 0.0;
            const double rec = support > 0 ? tp / support : 0.0;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            wf1 += support / static_cast<double>(m) * f1;
        }
        auto cm = confusion(y, yhat);
        worst = std::max({worst, std::abs(accuracy(cm) - acc), std::abs(weighted_f1(y, yhat) - wf1),
                          std::abs(weighted_f1(cm) - wf1)});
    }
    return {worst <= 1e-12, fmt("largest deviation from brute-force counts %.3g over 50 vectors", worst)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QFS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict end_to_end_determinism() {
    TempDir tmp;
    nlohmann::json datasets = nlohmann::json::array();
    for (int k = 0; k < 3; ++k) {
        const auto name = "synthetic_" + std::to_string(k);
        const auto csv = tmp.path() / (name + ".csv");
        if (run_cli("generate-synthetic --samples 400 --seed " + std::to_string(31 + k) + " -o " + csv.string()) != 0)
            return {false, "generate-synthetic failed"};
        datasets.push_back({{"name", name}, {"path", csv.string()}});
    }
    nlohmann::json doc = {{"schema_version", 1},
                          {"seed", 17},
                          {"datasets", datasets},
                          {"solvers", {{{"type", "simulated_annealing"}}}},
                          {"workers", 2},
                          {"run_id", "fixed"},
                          {"output_dir", (tmp.path() / "reports").string()}};
    const auto config = tmp.path() / "config.json";
    write_file_atomic(config, doc.dump(2));
    const auto summary_path = tmp.path() / "reports" / "fixed" / "summary.json";

    std::vector<nlohmann::json> summaries;
    for (int run = 0; run < 2; ++run) {
        if (run_cli("run " + config.string()) != 0) return {false, fmt("run %d exited nonzero", run + 1)};
        summaries.push_back(nlohmann::json::parse(read_file(summary_path)));
        fs::rename(summary_path, tmp.path() / ("summary_" + std::to_string(run) + ".json"));
    }
    auto subsets = [](const nlohmann::json& s) {
        std::vector<nlohmann::json> out;
        for (const auto& r : s.at("reports")) out.push_back(r.at("selected"));
        return out;
    };
    const bool same_summary = canonical_summary(summaries[0]) == canonical_summary(summaries[1]);
    const bool same_subsets = subsets(summaries[0]) == subsets(summaries[1]);
    const auto rows = summaries[0].at("reports").size();
    return {same_summary && same_subsets && rows == 6,
            fmt("summary %s, subsets %s, %zu rows over 3 datasets", same_summary ? "identical" : "differs",
                same_subsets ? "identical" : "differ", rows)};
}

Verdict remote_integrity() {
    const std::uint64_t seed = 99;
    MockAnnealerServer honest(annealer(seed));
    honest.start();
    MockServerOptions bad;
    bad.tamper_energy_offset = -0.5;
    MockAnnealerServer tampered(annealer(seed), bad);
    tampered.start();
    RemoteSolver remote(client_config(honest, 100));
    RemoteSolver liar(client_config(tampered, 100));

    std::mt19937_64 gen(8);
    std::size_t matched = 0, rejected = 0;
    const std::size_t trials = 5;
    for (std::size_t t = 0; t < trials; ++t) {
        auto p = build_mi_qubo(random_mi(10 + t * 2, gen), {});
        auto local = solve_simulated_annealing(p, 100, default_schedule(p, kDefaultSweeps, kQuiet), seed);
        auto r = remote.solve(p);
        if (r.best == local.best && r.best_energy == local.best_energy) ++matched;
        try {
            liar.solve(p);
        } catch (const RemoteError& e) {
            if (e.kind() == RemoteError::Kind::untrusted) ++rejected;
        }
    }
    return {matched == trials && rejected == trials,
            fmt("remote matched local SA on %zu/%zu problems; tampered results rejected %zu/%zu", matched, trials,
                rejected, trials)};
}

Verdict flip_delta() {
    std::mt19937_64 gen(404);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + gen() % 23;
        auto p = (t % 2 == 0) ? build_mi_qubo(random_mi(n, gen), {}) : random_qubo(n, gen, 0.5);
        auto dense = densify(p);
        auto x = random_bits(n, gen);
        const std::size_t i = gen() % n;
        auto y = x;
        y[i] ^= 1U;
        const double recomputed = naive_energy(dense, y) - naive_energy(dense, x);
        worst = std::max(worst, std::abs(incremental_flip_delta(p, SubsetVector(x), i) - recomputed));
    }
    return {worst <= 1e-12, fmt("largest deviation %.3g over 1000 triples", worst)};
}

Verdict smote_contract() {
    const std::size_t k = 5;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto spec = planted_spec(100 + s);
        spec.samples = 400;
        auto data = generate_synthetic(spec);
        auto out = smote_balance(data, k, derive_seed(s, 1), kQuiet);
        const auto counts = out.class_counts();
        if (counts[0] != counts[1]) return {false, fmt("seed %llu: class counts %zu/%zu", (unsigned long long)s, counts[0], counts[1])};

        std::vector<std::size_t> minority;
        for (std::size_t i = 0; i < data.rows(); ++i)
            if (data.y[i] == 1) minority.push_back(i);
        auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
            double d = 0;
            for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
            return d;
        };
        // Brute-force neighbour lists, ties at the k-th distance included.
        std::vector<std::vector<std::size_t>> neighbours(minority.size());
        for (std::size_t a = 0; a < minority.size(); ++a) {
            std::vector<std::pair<double, std::size_t>> d;
            for (std::size_t b = 0; b < minority.size(); ++b)
                if (b != a) d.emplace_back(dist2(data.x[minority[a]], data.x[minority[b]]), b);
            std::sort(d.begin(), d.end());
            const double cutoff = d[std::min(k, d.size()) - 1].first;
            for (const auto& [dd, b] : d)
                if (dd <= cutoff) neighbours[a].push_back(b);
        }
        for (std::size_t r = data.rows(); r < out.rows(); ++r) {
            const auto& pt = out.x[r];
            bool contained = false;
            for (std::size_t a = 0; a < minority.size() && !contained; ++a) {
                const auto& pa = data.x[minority[a]];
                for (auto b : neighbours[a]) {
                    const auto& pb = data.x[minority[b]];
                    double num = 0, den = 0;
                    for (std::size_t j = 0; j < pt.size(); ++j) {
                        num += (pt[j] - pa[j]) * (pb[j] - pa[j]);
                        den += (pb[j] - pa[j]) * (pb[j] - pa[j]);
                    }
                    const double t = den > 0 ? num / den : 0.0;
                    if (t < -1e-12 || t > 1 + 1e-12) continue;
                    double off = 0;
                    for (std::size_t j = 0; j < pt.size(); ++j)
                        off = std::max(off, std::abs(pa[j] + t * (pb[j] - pa[j]) - pt[j]));
                    if (off <= 1e-9) {
                        contained = true;
                        break;
                    }
                }
            }
            if (!contained || out.y[r] != 1)
                return {false, fmt("seed %llu: synthetic row %zu is off every neighbour segment", (unsigned long long)s, r)};
        }
    }
    return {true, "balanced counts and segment containment hold for 10 seeds"};
}

Verdict baseline_comparability() {
    const auto& runs = planted_runs();
    if (!runs.error.empty()) return {false, runs.error};
    std::size_t same_split = 0, within = 0;
    double worst = 0.0, deficit = 0.0;
    std::string outside;
    for (std::size_t s = 0; s < runs.selection.size(); ++s) {
        const auto& base = runs.baseline[s];
        const auto& sel = runs.selection[s];
        if (!base.split_fingerprint.empty() && base.split_fingerprint == sel.split_fingerprint) ++same_split;
        const double gap = sel.accuracy - base.accuracy;
        worst = std::max(worst, std::abs(gap));
        deficit = std::max(deficit, -gap);
        if (std::abs(gap) <= 0.05) {
            ++within;
        } else {
            outside += fmt(" seed %zu: %.3f vs %.3f;", s + 1, sel.accuracy, base.accuracy);
        }
    }
    const auto n = runs.selection.size();
    return {same_split == n && within == n,
            fmt("split fingerprints equal on %zu/%zu seeds; accuracy within 5 pp on %zu/%zu (largest gap %.1f pp, "
                "largest shortfall of selection %.1f pp)",
                same_split, n, within, n, 100 * worst, 100 * deficit) +
                (outside.empty() ? "" : "; outside (selection vs all):" + outside.substr(0, outside.size() - 1))};
}

}  // namespace

int main(int argc, char** argv) {
    // --expected-failure N: criterion N may fail without failing the run. Its line still says FAIL.
    std::set<std::size_t> waived;
    for (int a = 1; a + 1 < argc; ++a) {
        if (std::string(argv[a]) == "--expected-failure") waived.insert(std::strtoul(argv[++a], nullptr, 10));
    }
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"limit cases", limit_cases},
        {"planted redundancy", planted_redundancy},
        {"cardinality reduction", cardinality_reduction},
        {"metric correctness", metric_correctness},
        {"end-to-end determinism", end_to_end_determinism},
        {"remote path integrity", remote_integrity},
        {"flip-delta correctness", flip_delta},
        {"SMOTE contract", smote_contract},
        {"baseline comparability", baseline_comparability},
    };
    int failed = 0, unwaived = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const bool expected = waived.count(i + 1) > 0;
        if (!v.pass) {
            ++failed;
            if (!expected) ++unwaived;
        }
        std::printf("%s %2zu %s: %s%s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), expected ? (v.pass ? " [waived, but passed]" : " [expected failure]") : "");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed (%d not waived)\n", failed, criteria.size(), unwaived);
    return unwaived == 0 ? 0 : 1;
}
