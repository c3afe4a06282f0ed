#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qfs/annealer_client.hpp"
#include "qfs/pipeline.hpp"
#include "qfs/solvers.hpp"
#include "qfs/synthetic.hpp"
#include "qfs/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

qfs::MockAnnealerServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_run(const std::string& config_path) {
    qfs::RunConfig cfg;
    try {
        cfg = qfs::load_config(config_path);
    } catch (const qfs::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    }
    auto outcome = qfs::run_experiment(cfg);
    for (const auto& f : outcome.failures) {
        std::cerr << "dataset '" << f.dataset << "'";
        if (!f.solver.empty()) std::cerr << " solver '" << f.solver << "'";
        std::cerr << " failed: " << f.error << '\n';
    }
    std::cout << "wrote " << outcome.reports.size() << " report rows to " << outcome.run_dir.string()
              << '\n';
    return outcome.exit_code == 0 ? kExitOk : kExitRuntime;
}

int cmd_validate(const std::string& config_path) {
    auto problems = qfs::validate_config_file(config_path);
    if (problems.empty()) {
        std::cout << config_path << ": ok\n";
        return kExitOk;
    }
    for (const auto& p : problems) std::cerr << config_path << ": " << p << '\n';
    return kExitConfig;
}

int cmd_generate(const qfs::SyntheticSpec& spec, const std::string& out) {
    auto data = qfs::generate_synthetic(spec);
    if (out.empty() || out == "-") {
        std::cout << qfs::to_csv(data);
    } else {
        qfs::write_csv(data, out);
    }
    return kExitOk;
}

int cmd_solve(const std::string& input, const std::string& output, const std::string& solver,
              qfs::AnnealParams params) {
    auto problem = qfs::qubo_from_json(nlohmann::json::parse(qfs::read_file(input)));
    qfs::SolverResult result;
    if (solver == "exhaustive") {
        result = qfs::solve_exhaustive(problem);
    } else {
        result = qfs::SimulatedAnnealingSolver(params).solve(problem);
    }
    auto text = qfs::to_json(result).dump(2) + "\n";
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        qfs::write_file_atomic(output, text);
    }
    return kExitOk;
}

int cmd_mock_server(const std::string& host, int port, const std::string& token, int latency_ms,
                    std::size_t sweeps, std::uint64_t seed) {
    qfs::MockServerOptions opts;
    if (!token.empty()) opts.auth_token = token;
    opts.latency.fixed_ms = latency_ms;
    qfs::MockAnnealerServer server(
        [sweeps, seed](const qfs::QuboProblem& p, std::size_t reads) {
            auto schedule = qfs::default_schedule(p, sweeps);
            return qfs::solve_simulated_annealing(p, reads, schedule, seed);
        },
        opts);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "mock annealer listening on http://" << host << ':' << port << std::endl;
    server.serve_forever(host, port);
    g_server = nullptr;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QUBO feature subset selection for defect prediction"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file (JSON)")->required();

    auto* validate = app.add_subcommand("validate", "Check a config file without running it");
    validate->add_option("config", config_path, "Config file (JSON)")->required();

    qfs::SyntheticSpec spec;
    std::string synth_out;
    auto* gen = app.add_subcommand("generate-synthetic", "Write a planted-structure dataset as CSV");
    gen->add_option("--informative", spec.informative, "Informative features")->capture_default_str();
    gen->add_option("--duplicates", spec.duplicates, "Exact copies of informative features")->capture_default_str();
    gen->add_option("--noise", spec.noise, "Pure-noise features")->capture_default_str();
    gen->add_option("--samples", spec.samples, "Rows")->capture_default_str();
    gen->add_option("--imbalance", spec.imbalance, "Majority:minority ratio")->capture_default_str();
    gen->add_option("--signal-max", spec.signal_max, "Largest class shift")->capture_default_str();
    gen->add_option("--signal-min", spec.signal_min, "Smallest class shift")->capture_default_str();
    gen->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    gen->add_option("--label", spec.label_name, "Label column name")->capture_default_str();
    gen->add_option("-o,--output", synth_out, "Output CSV (default stdout)");

    std::string solve_in, solve_out, solver_kind = "simulated_annealing";
    qfs::AnnealParams anneal;
    auto* solve = app.add_subcommand("solve", "Solve a QUBO JSON document");
    solve->add_option("input", solve_in, "QUBO JSON {n, linear, quadratic}")->required();
    solve->add_option("-o,--output", solve_out, "Result JSON (default stdout)");
    solve->add_option("--solver", solver_kind, "exhaustive | simulated_annealing")
        ->check(CLI::IsMember({"exhaustive", "simulated_annealing"}))
        ->capture_default_str();
    solve->add_option("--num-reads", anneal.num_reads)->capture_default_str();
    solve->add_option("--sweeps", anneal.sweeps)->capture_default_str();
    solve->add_option("--seed", anneal.seed)->capture_default_str();
    solve->add_option("--threads", anneal.threads)->capture_default_str();

    std::string host = "127.0.0.1", token;
    int port = 8080, latency_ms = 0;
    std::size_t mock_sweeps = qfs::kDefaultSweeps;
    std::uint64_t mock_seed = 0;
    auto* mock = app.add_subcommand("mock-server", "Serve the annealer job protocol backed by local SA");
    mock->add_option("--host", host)->capture_default_str();
    mock->add_option("--port", port)->capture_default_str();
    mock->add_option("--token", token, "Require this bearer token");
    mock->add_option("--latency-ms", latency_ms, "Delay added to every request")->capture_default_str();
    mock->add_option("--sweeps", mock_sweeps)->capture_default_str();
    mock->add_option("--seed", mock_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path);
        if (*validate) return cmd_validate(config_path);
        if (*gen) return cmd_generate(spec, synth_out);
        if (*solve) return cmd_solve(solve_in, solve_out, solver_kind, anneal);
        if (*mock) return cmd_mock_server(host, port, token, latency_ms, mock_sweeps, mock_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
