#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfs/qubo.hpp"
#include "qfs/solvers.hpp"

namespace qfs {

inline constexpr std::size_t kMaxRemoteVariables = 4096;

class RemoteError : public std::runtime_error {
public:
    enum class Kind { transport, payload, server, auth, timeout, job_failed, untrusted, protocol };

    RemoteError(Kind kind, const std::string& what, int http_status = 0, int attempts = 1,
                std::string server_message = {});

    Kind kind() const noexcept { return kind_; }
    int http_status() const noexcept { return http_status_; }
    /// Attempts made before giving up (transport failures are retried).
    int attempts() const noexcept { return attempts_; }
    bool retryable() const noexcept { return kind_ == Kind::transport || kind_ == Kind::server; }
    /// Message reported by the server, verbatim.
    const std::string& server_message() const noexcept { return server_message_; }

private:
    Kind kind_;
    int http_status_;
    int attempts_;
    std::string server_message_;
};

struct RemoteConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::optional<std::string> auth_token;
    int poll_interval_ms = 100;
    int timeout_ms = 60000;
    std::size_t num_reads = 100;
    int max_retries = 2;

    /// Requires timeout_ms > poll_interval_ms > 0 and num_reads >= 1.
    void validate() const;
};

enum class JobStatus { queued, running, done, failed };

std::string_view to_string(JobStatus s);
JobStatus job_status_from_string(std::string_view s);

struct RemoteJob {
    std::string job_id;
    JobStatus status = JobStatus::queued;
    std::string submitted_at;
    std::optional<SolverResult> result;
    std::string message;
};

/// POST /v1/jobs body: {problem: {n, linear, quadratic}, num_reads}.
nlohmann::json job_request_json(const QuboProblem& problem, std::size_t num_reads);

/// Client for the job protocol. Safe to share between threads.
class AnnealerClient {
public:
    explicit AnnealerClient(RemoteConfig config);

    const RemoteConfig& config() const noexcept { return config_; }

    std::string submit(const QuboProblem& problem) const;
    /// Sends an arbitrary request body; used to exercise server-side validation.
    std::string submit_payload(const nlohmann::json& body) const;

    /// One GET of the job resource.
    RemoteJob poll_once(const std::string& job_id) const;
    /// Polls until the job is done or failed; throws on timeout.
    RemoteJob poll(const std::string& job_id) const;
    /// Polls to completion, then re-checks every returned energy against `problem`.
    SolverResult collect(const std::string& job_id, const QuboProblem& problem) const;

    SolverResult solve(const QuboProblem& problem) const { return collect(submit(problem), problem); }

private:
    RemoteConfig config_;
};

/// Rejects results whose energies do not match a local recomputation (> 1e-6).
void verify_remote_result(const SolverResult& result, const QuboProblem& problem);

class RemoteSolver final : public Solver {
public:
    explicit RemoteSolver(RemoteConfig config, std::string label = "remote")
        : client_(std::move(config)), label_(std::move(label)) {}
    std::string name() const override { return label_; }
    SolverResult solve(const QuboProblem& problem) const override { return client_.solve(problem); }

private:
    AnnealerClient client_;
    std::string label_;
};

// ---------------------------------------------------------------------------
// In-process mock service

struct LatencyModel {
    /// Delay applied to every request.
    int fixed_ms = 0;
    /// Delay for the k-th request (overrides fixed_ms while entries remain).
    std::vector<int> per_request_ms;
    /// A finished job reports "running" until it has been polled this many times.
    std::size_t polls_before_done = 0;
};

struct MockServerOptions {
    std::optional<std::string> auth_token;
    LatencyModel latency;
    std::size_t workers = 2;
    /// Added to every reported energy, to simulate an untrustworthy backend.
    std::optional<double> tamper_energy_offset;
    /// Every job fails with this message.
    std::optional<std::string> fail_message;
};

using BackingSolver = std::function<SolverResult(const QuboProblem&, std::size_t num_reads)>;

class MockAnnealerServer {
public:
    explicit MockAnnealerServer(BackingSolver solver, MockServerOptions options = {});
    ~MockAnnealerServer();

    MockAnnealerServer(const MockAnnealerServer&) = delete;
    MockAnnealerServer& operator=(const MockAnnealerServer&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port. Returns the port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop() is called from elsewhere.
    void serve_forever(const std::string& host, int port);
    void stop();

    std::string base_url() const;
    std::size_t poll_count(const std::string& job_id) const;
    std::size_t request_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qfs
