#include "qfs/annealer_client.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <iomanip>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace qfs {

RemoteError::RemoteError(Kind kind, const std::string& what, int http_status, int attempts,
                         std::string server_message)
    : std::runtime_error(what),
      kind_(kind),
      http_status_(http_status),
      attempts_(attempts),
      server_message_(std::move(server_message)) {}

void RemoteConfig::validate() const {
    if (base_url.empty()) throw std::invalid_argument("remote base_url is empty");
    if (!(poll_interval_ms > 0)) throw std::invalid_argument("poll_interval_ms must be positive");
    if (!(timeout_ms > poll_interval_ms)) {
        throw std::invalid_argument("timeout_ms must exceed poll_interval_ms");
    }
    if (num_reads < 1) throw std::invalid_argument("num_reads must be at least 1");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
}

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "unknown";
}

JobStatus job_status_from_string(std::string_view s) {
    if (s == "queued") return JobStatus::queued;
    if (s == "running") return JobStatus::running;
    if (s == "done") return JobStatus::done;
    if (s == "failed") return JobStatus::failed;
    throw RemoteError(RemoteError::Kind::protocol, "unknown job status '" + std::string(s) + "'");
}

nlohmann::json job_request_json(const QuboProblem& problem, std::size_t num_reads) {
    return {{"problem", to_json(problem)}, {"num_reads", num_reads}};
}

// ---------------------------------------------------------------------------
// Client

namespace {

using Clock = std::chrono::steady_clock;

std::string error_message(const httplib::Result& res) {
    try {
        auto j = nlohmann::json::parse(res->body);
        if (j.contains("error")) return j["error"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    return res->body;
}

void raise_for_status(const httplib::Result& res, int attempts) {
    const int status = res->status;
    if (status >= 200 && status < 300) return;
    auto msg = error_message(res);
    if (status == 401 || status == 403) {
        throw RemoteError(RemoteError::Kind::auth, "authorization rejected: " + msg, status, attempts, msg);
    }
    if (status >= 400 && status < 500) {
        throw RemoteError(RemoteError::Kind::payload, "request rejected (HTTP " + std::to_string(status) + "): " + msg,
                          status, attempts, msg);
    }
    throw RemoteError(RemoteError::Kind::server, "server error (HTTP " + std::to_string(status) + "): " + msg,
                      status, attempts, msg);
}

class Http {
public:
    explicit Http(const RemoteConfig& cfg) : cfg_(cfg) {}

    nlohmann::json send(const std::string& method, const std::string& path,
                        const nlohmann::json* body) const {
        int attempts = 0;
        for (;;) {
            ++attempts;
            httplib::Client cli(cfg_.base_url);
            cli.set_connection_timeout(std::chrono::milliseconds(std::min(cfg_.timeout_ms, 5000)));
            cli.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            httplib::Headers headers;
            if (cfg_.auth_token) headers.emplace("Authorization", "Bearer " + *cfg_.auth_token);

            httplib::Result res = method == "POST"
                                      ? cli.Post(path, headers, body->dump(), "application/json")
                                      : cli.Get(path, headers);
            if (!res) {
                if (attempts <= cfg_.max_retries) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.poll_interval_ms));
                    continue;
                }
                throw RemoteError(RemoteError::Kind::transport,
                                  "cannot reach " + cfg_.base_url + ": " + httplib::to_string(res.error()) +
                                      " (after " + std::to_string(attempts) + " attempts)",
                                  0, attempts);
            }
            if (res->status >= 500 && attempts <= cfg_.max_retries) {
                std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.poll_interval_ms));
                continue;
            }
            raise_for_status(res, attempts);
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw RemoteError(RemoteError::Kind::protocol,
                                  std::string("response is not JSON: ") + e.what(), res->status, attempts);
            }
        }
    }

private:
    const RemoteConfig& cfg_;
};

}  // namespace

AnnealerClient::AnnealerClient(RemoteConfig config) : config_(std::move(config)) { config_.validate(); }

std::string AnnealerClient::submit(const QuboProblem& problem) const {
    if (problem.size() > kMaxRemoteVariables) {
        throw RemoteError(RemoteError::Kind::payload,
                          "problem has " + std::to_string(problem.size()) + " variables; the limit is " +
                              std::to_string(kMaxRemoteVariables));
    }
    return submit_payload(job_request_json(problem, config_.num_reads));
}

std::string AnnealerClient::submit_payload(const nlohmann::json& body) const {
    auto reply = Http(config_).send("POST", "/v1/jobs", &body);
    if (!reply.contains("job_id") || !reply["job_id"].is_string() ||
        reply["job_id"].get<std::string>().empty()) {
        throw RemoteError(RemoteError::Kind::protocol, "submit response lacks a job_id");
    }
    return reply["job_id"].get<std::string>();
}

RemoteJob AnnealerClient::poll_once(const std::string& job_id) const {
    auto reply = Http(config_).send("GET", "/v1/jobs/" + job_id, nullptr);
    RemoteJob job;
    try {
        job.job_id = reply.value("job_id", job_id);
        job.status = job_status_from_string(reply.at("status").get<std::string>());
        job.submitted_at = reply.value("submitted_at", "");
        job.message = reply.value("message", "");
        if (reply.contains("result") && !reply["result"].is_null()) {
            job.result = solver_result_from_json(reply["result"]);
        }
    } catch (const nlohmann::json::exception& e) {
        throw RemoteError(RemoteError::Kind::protocol, std::string("bad job response: ") + e.what());
    } catch (const SolverError& e) {
        throw RemoteError(RemoteError::Kind::protocol, e.what());
    }
    if (job.result.has_value() != (job.status == JobStatus::done)) {
        throw RemoteError(RemoteError::Kind::protocol, "job result must be present exactly when done");
    }
    return job;
}

RemoteJob AnnealerClient::poll(const std::string& job_id) const {
    const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
    for (;;) {
        auto job = poll_once(job_id);
        if (job.status == JobStatus::done || job.status == JobStatus::failed) return job;
        if (Clock::now() + std::chrono::milliseconds(config_.poll_interval_ms) > deadline) {
            throw RemoteError(RemoteError::Kind::timeout,
                              "job " + job_id + " not finished within " + std::to_string(config_.timeout_ms) + " ms");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.poll_interval_ms));
    }
}

SolverResult AnnealerClient::collect(const std::string& job_id, const QuboProblem& problem) const {
    auto job = poll(job_id);
    if (job.status == JobStatus::failed) {
        throw RemoteError(RemoteError::Kind::job_failed, "job " + job_id + " failed: " + job.message, 0, 1,
                          job.message);
    }
    verify_remote_result(*job.result, problem);
    return *job.result;
}

void verify_remote_result(const SolverResult& result, const QuboProblem& problem) {
    constexpr double kTolerance = 1e-6;
    auto untrusted = [](const std::string& why) {
        return RemoteError(RemoteError::Kind::untrusted, "untrusted remote result: " + why);
    };
    if (result.best.size() != problem.size()) throw untrusted("best vector has the wrong length");
    if (result.samples.empty()) throw untrusted("no samples");
    const double local = energy(problem, result.best);
    if (!(std::abs(local - result.best_energy) <= kTolerance)) {
        std::ostringstream msg;
        msg << std::setprecision(17) << "reported best_energy " << result.best_energy
            << " but local recomputation gives " << local;
        throw untrusted(msg.str());
    }
    std::size_t total = 0;
    for (const auto& s : result.samples) {
        if (s.bits.size() != problem.size()) throw untrusted("sample has the wrong length");
        if (!(std::abs(energy(problem, s.bits) - s.energy) <= kTolerance)) {
            throw untrusted("sample energy does not match local recomputation");
        }
        if (s.energy < result.best_energy - kTolerance) throw untrusted("a sample beats the reported best");
        total += s.count;
    }
    if (total != result.num_reads) throw untrusted("sample counts do not add up to num_reads");
}

// ---------------------------------------------------------------------------
// Mock server

namespace {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct MockAnnealerServer::Impl {
    struct Job {
        JobStatus status = JobStatus::queued;
        std::string submitted_at;
        QuboProblem problem;
        std::size_t num_reads = 0;
        std::optional<SolverResult> result;
        std::string message;
        std::size_t polls = 0;
    };

    BackingSolver solver;
    MockServerOptions options;
    httplib::Server server;
    std::thread listener;
    int port = 0;
    std::string host = "127.0.0.1";

    mutable std::mutex mutex;
    std::condition_variable cv;
    std::map<std::string, Job> jobs;
    std::deque<std::string> queue;
    std::vector<std::jthread> workers;
    std::atomic<std::size_t> requests{0};
    std::size_t next_id = 1;
    bool stopping = false;

    Impl(BackingSolver s, MockServerOptions o) : solver(std::move(s)), options(std::move(o)) {
        install_routes();
        const auto n = std::max<std::size_t>(options.workers, 1);
        for (std::size_t i = 0; i < n; ++i) workers.emplace_back([this] { work(); });
    }

    ~Impl() { shutdown(); }

    void shutdown() {
        server.stop();
        if (listener.joinable()) listener.join();
        {
            std::lock_guard lock(mutex);
            stopping = true;
        }
        cv.notify_all();
        workers.clear();
    }

    void delay_request() {
        const auto k = requests.fetch_add(1);
        int ms = options.latency.fixed_ms;
        if (k < options.latency.per_request_ms.size()) ms = options.latency.per_request_ms[k];
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    bool authorised(const httplib::Request& req, httplib::Response& res) const {
        if (!options.auth_token) return true;
        if (req.get_header_value("Authorization") == "Bearer " + *options.auth_token) return true;
        reply_json(res, 401, {{"error", "missing or invalid bearer token"}});
        return false;
    }

    void install_routes() {
        server.Post("/v1/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            delay_request();
            if (!authorised(req, res)) return;
            QuboProblem problem;
            std::size_t num_reads = 0;
            try {
                auto body = nlohmann::json::parse(req.body);
                problem = qubo_from_json(body.at("problem"));
                const auto& reads = body.at("num_reads");
                if (!reads.is_number_integer() || reads.get<long long>() < 1) {
                    throw std::invalid_argument("num_reads must be a positive integer");
                }
                num_reads = reads.get<std::size_t>();
                if (problem.size() > kMaxRemoteVariables) {
                    throw std::invalid_argument("problem exceeds " + std::to_string(kMaxRemoteVariables) +
                                                " variables");
                }
            } catch (const std::exception& e) {
                reply_json(res, 400, {{"error", e.what()}});
                return;
            }
            std::string id;
            {
                std::lock_guard lock(mutex);
                std::ostringstream ss;
                ss << "job-" << std::setw(6) << std::setfill('0') << next_id++;
                id = ss.str();
                Job job;
                job.submitted_at = utc_timestamp();
                job.problem = std::move(problem);
                job.num_reads = num_reads;
                jobs.emplace(id, std::move(job));
                queue.push_back(id);
            }
            cv.notify_one();
            reply_json(res, 201, {{"job_id", id}});
        });

        server.Get(R"(/v1/jobs/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            delay_request();
            if (!authorised(req, res)) return;
            const std::string id = req.matches[1];
            std::lock_guard lock(mutex);
            auto it = jobs.find(id);
            if (it == jobs.end()) {
                reply_json(res, 404, {{"error", "unknown job " + id}});
                return;
            }
            auto& job = it->second;
            ++job.polls;
            auto visible = job.status;
            if (visible == JobStatus::done && job.polls < options.latency.polls_before_done) {
                visible = JobStatus::running;
            }
            nlohmann::json body = {{"job_id", id},
                                   {"status", to_string(visible)},
                                   {"submitted_at", job.submitted_at},
                                   {"result", nullptr}};
            if (visible == JobStatus::done) body["result"] = to_json(*job.result);
            if (visible == JobStatus::failed) body["message"] = job.message;
            reply_json(res, 200, body);
        });
    }

    void work() {
        for (;;) {
            std::string id;
            QuboProblem problem;
            std::size_t reads = 0;
            {
                std::unique_lock lock(mutex);
                cv.wait(lock, [this] { return stopping || !queue.empty(); });
                if (stopping) return;
                id = queue.front();
                queue.pop_front();
                auto& job = jobs.at(id);
                job.status = JobStatus::running;
                problem = job.problem;
                reads = job.num_reads;
            }
            std::optional<SolverResult> result;
            std::string message;
            if (options.fail_message) {
                message = *options.fail_message;
            } else {
                try {
                    result = solver(problem, reads);
                    if (options.tamper_energy_offset) {
                        result->best_energy += *options.tamper_energy_offset;
                        for (auto& s : result->samples) s.energy += *options.tamper_energy_offset;
                    }
                } catch (const std::exception& e) {
                    message = e.what();
                }
            }
            std::lock_guard lock(mutex);
            auto& job = jobs.at(id);
            job.result = std::move(result);
            job.message = std::move(message);
            job.status = job.result ? JobStatus::done : JobStatus::failed;
        }
    }
};

MockAnnealerServer::MockAnnealerServer(BackingSolver solver, MockServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(solver), std::move(options))) {}

MockAnnealerServer::~MockAnnealerServer() = default;

int MockAnnealerServer::start(const std::string& host, int port) {
    impl_->host = host;
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else {
        impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->port <= 0) throw std::runtime_error("mock server cannot bind " + host);
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void MockAnnealerServer::serve_forever(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port;
    if (!impl_->server.listen(host, port)) {
        throw std::runtime_error("mock server cannot listen on " + host + ":" + std::to_string(port));
    }
}

void MockAnnealerServer::stop() { impl_->shutdown(); }

std::string MockAnnealerServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

std::size_t MockAnnealerServer::poll_count(const std::string& job_id) const {
    std::lock_guard lock(impl_->mutex);
    auto it = impl_->jobs.find(job_id);
    return it == impl_->jobs.end() ? 0 : it->second.polls;
}

std::size_t MockAnnealerServer::request_count() const { return impl_->requests.load(); }

}  // namespace qfs
