#include "qfs/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

#include "qfs/random.hpp"

namespace qfs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// SolverResult

void SolverResult::check(const QuboProblem& problem) const {
    if (best.size() != problem.size()) throw SolverError("best vector has wrong length");
    if (samples.empty()) throw SolverError("result carries no samples");
    if (!(sampling_time_ms >= 0.0)) throw SolverError("sampling time must be non-negative");
    std::size_t total = 0;
    double min_energy = samples.front().energy;
    for (const auto& s : samples) {
        if (s.bits.size() != problem.size()) throw SolverError("sample has wrong length");
        total += s.count;
        min_energy = std::min(min_energy, s.energy);
    }
    if (total != num_reads) throw SolverError("sample counts do not add up to num_reads");
    if (best_energy != min_energy) throw SolverError("best_energy is not the minimum sample energy");
    if (best_energy != energy(problem, best)) throw SolverError("best_energy does not match best");
}

nlohmann::json to_json(const SolverResult& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : r.samples) {
        samples.push_back({{"bits", to_json(s.bits)}, {"energy", s.energy}, {"count", s.count}});
    }
    return {{"solver", r.solver_name},
            {"num_reads", r.num_reads},
            {"sampling_time_ms", r.sampling_time_ms},
            {"best_bits", to_json(r.best)},
            {"best_energy", r.best_energy},
            {"samples", std::move(samples)}};
}

SolverResult solver_result_from_json(const nlohmann::json& j) {
    try {
        SolverResult r;
        r.solver_name = j.at("solver").get<std::string>();
        r.num_reads = j.at("num_reads").get<std::size_t>();
        r.sampling_time_ms = j.at("sampling_time_ms").get<double>();
        r.best = subset_from_json(j.at("best_bits"));
        r.best_energy = j.at("best_energy").get<double>();
        for (const auto& s : j.at("samples")) {
            r.samples.push_back({subset_from_json(s.at("bits")), s.at("energy").get<double>(),
                                 s.at("count").get<std::size_t>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SolverError(std::string("malformed solver result JSON: ") + e.what());
    } catch (const QuboError& e) {
        throw SolverError(std::string("malformed solver result JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Schedule

void AnnealSchedule::validate() const {
    if (sweeps < 1) throw SolverError("schedule needs at least one sweep");
    if (!(beta_start > 0.0) || !std::isfinite(beta_start)) {
        throw SolverError("beta_start must be positive and finite");
    }
    if (!(beta_end > beta_start) || !std::isfinite(beta_end)) {
        throw SolverError("beta_end must be finite and greater than beta_start");
    }
}

double AnnealSchedule::beta_at(std::size_t sweep) const {
    if (sweeps <= 1) return beta_end;
    double t = static_cast<double>(sweep) / static_cast<double>(sweeps - 1);
    return beta_start * std::pow(beta_end / beta_start, t);
}

AnnealSchedule default_schedule(const QuboProblem& problem, std::size_t sweeps,
                                const WarningSink& warn) {
    AnnealSchedule s;
    s.sweeps = sweeps;
    if (problem.all_zero()) {
        if (warn) warn("all-zero QUBO; using fallback schedule beta 0.1 -> 10");
        s.beta_start = 0.1;
        s.beta_end = 10.0;
        s.validate();
        return s;
    }
    std::vector<double> bound(problem.size(), 0.0);
    double min_nonzero = std::numeric_limits<double>::infinity();
    for (const auto& [i, q] : problem.linear_terms()) {
        bound[i] += std::abs(q);
        min_nonzero = std::min(min_nonzero, std::abs(q));
    }
    for (const auto& [k, q] : problem.quadratic_terms()) {
        bound[k.first] += std::abs(q);
        bound[k.second] += std::abs(q);
        min_nonzero = std::min(min_nonzero, std::abs(q));
    }
    const double max_delta = *std::ranges::max_element(bound);
    s.beta_start = std::numbers::ln2 / max_delta;
    s.beta_end = std::log(100.0) / min_nonzero;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Flip deltas

CompiledQubo::CompiledQubo(const QuboProblem& problem)
    : linear_(problem.size(), 0.0), offsets_(problem.size() + 1, 0) {
    for (const auto& [i, q] : problem.linear_terms()) linear_[i] = q;
    for (const auto& [k, q] : problem.quadratic_terms()) {
        ++offsets_[k.first + 1];
        ++offsets_[k.second + 1];
    }
    for (std::size_t i = 0; i < problem.size(); ++i) offsets_[i + 1] += offsets_[i];
    neighbours_.resize(offsets_.back());
    weights_.resize(offsets_.back());
    auto fill = offsets_;
    for (const auto& [k, q] : problem.quadratic_terms()) {
        neighbours_[fill[k.first]] = k.second;
        weights_[fill[k.first]++] = q;
        neighbours_[fill[k.second]] = k.first;
        weights_[fill[k.second]++] = q;
    }
    const auto n = problem.size();
    if (n <= kDenseCouplingLimit) {
        dense_.assign(n * n, 0.0);
        for (const auto& [k, q] : problem.quadratic_terms()) {
            dense_[k.first * n + k.second] = q;
            dense_[k.second * n + k.first] = q;
        }
    }
}

double CompiledQubo::exact_energy(const std::vector<std::uint8_t>& bits) const {
    std::vector<double> terms;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!bits[i]) continue;
        if (linear_[i] != 0.0) terms.push_back(linear_[i]);
        for (auto k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            if (neighbours_[k] > i && bits[neighbours_[k]]) terms.push_back(weights_[k]);
        }
    }
    return ordered_sum(terms);
}

double incremental_flip_delta(const CompiledQubo& compiled, const SubsetVector& x, std::size_t i) {
    if (x.size() != compiled.size()) throw QuboError("subset length does not match problem");
    if (i >= compiled.size()) throw QuboError("flip index " + std::to_string(i) + " out of range");
    return compiled.flip_delta(x.bits, i);
}

double incremental_flip_delta(const QuboProblem& problem, const SubsetVector& x, std::size_t i) {
    return incremental_flip_delta(CompiledQubo(problem), x, i);
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

SolverResult aggregate(const QuboProblem& problem, std::vector<SubsetVector> finals,
                       std::string name) {
    std::map<std::vector<std::uint8_t>, std::size_t> counts;
    for (auto& f : finals) ++counts[std::move(f.bits)];

    SolverResult r;
    r.solver_name = std::move(name);
    r.num_reads = finals.size();
    for (auto& [bits, count] : counts) {
        SubsetVector x(bits);
        double e = energy(problem, x);
        r.samples.push_back({std::move(x), e, count});
    }
    std::ranges::sort(r.samples, [](const Sample& a, const Sample& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return code_less(a.bits, b.bits);
    });
    r.best = r.samples.front().bits;
    r.best_energy = r.samples.front().energy;
    return r;
}

}  // namespace

namespace {

bool bits_code_less(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

// Greedy descent in (exact energy, code) order. Deltas only pre-filter candidates;
// acceptance compares exact energies, so the walk strictly decreases and stops.
void polish(const CompiledQubo& q, std::vector<std::uint8_t>& bits, double& tracked) {
    const auto n = q.size();
    double magnitude = 0.0;
    std::vector<std::uint8_t> none(n, 0);
    for (std::size_t i = 0; i < n; ++i) magnitude = std::max(magnitude, std::abs(q.local_field(none, i)));
    std::vector<std::uint8_t> all(n, 1);
    for (std::size_t i = 0; i < n; ++i) magnitude = std::max(magnitude, std::abs(q.local_field(all, i)));
    const double tol = 1e-9 * (1.0 + magnitude);

    double current = q.exact_energy(bits);
    std::vector<double> field(n);
    std::vector<std::uint8_t> cand;
    auto accept = [&](double delta) {
        const double e = q.exact_energy(cand);
        if (e < current || (e == current && bits_code_less(cand, bits))) {
            bits.swap(cand);
            current = e;
            tracked += delta;
            return true;
        }
        return false;
    };

    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t i = 0; i < n; ++i) field[i] = q.local_field(bits, i);
        for (std::size_t i = 0; i < n && !moved; ++i) {
            const double delta = bits[i] ? -field[i] : field[i];
            if (delta > tol) continue;
            cand = bits;
            cand[i] ^= 1U;
            moved = accept(delta);
        }
        if (!q.has_dense()) continue;
        for (std::size_t i = 0; i < n && !moved; ++i) {
            if (!bits[i]) continue;
            for (std::size_t j = 0; j < n && !moved; ++j) {
                if (bits[j]) continue;
                const double delta = field[j] - field[i] - q.coupling(i, j);
                if (delta > tol) continue;
                cand = bits;
                cand[i] = 0;
                cand[j] = 1;
                moved = accept(delta);
            }
        }
    }
}

}  // namespace

ReadOutcome anneal_read(const CompiledQubo& problem, const AnnealSchedule& schedule,
                        std::uint64_t read_seed) {
    const auto n = problem.size();
    Rng rng(read_seed);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);

    // Energy of the random start, accumulated by switching bits on one at a time.
    double tracked = 0.0;
    {
        std::vector<std::uint8_t> partial(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!bits[i]) continue;
            tracked += problem.flip_delta(partial, i);
            partial[i] = 1;
        }
    }

    for (std::size_t sweep = 0; sweep < schedule.sweeps; ++sweep) {
        const double beta = schedule.beta_at(sweep);
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = problem.flip_delta(bits, i);
            bool accept = false;
            if (delta < 0.0) {
                accept = true;
            } else if (delta == 0.0) {
                accept = bits[i] != 0;
            } else {
                const double x = beta * delta;
                accept = x < 40.0 && rng.uniform() < std::exp(-x);
            }
            if (accept) {
                bits[i] ^= 1U;
                tracked += delta;
            }
        }
    }
    if (schedule.polish) polish(problem, bits, tracked);
    return {SubsetVector(std::move(bits)), tracked};
}

SolverResult solve_exhaustive(const QuboProblem& problem) {
    if (problem.size() > kMaxExhaustiveVariables) {
        throw SolverError("exhaustive solver limited to " +
                          std::to_string(kMaxExhaustiveVariables) + " variables");
    }
    const auto start = Clock::now();
    auto minimum = brute_force_minimum(problem);
    const double ms = elapsed_ms(start);

    SolverResult r;
    r.solver_name = "exhaustive";
    r.num_reads = 1;
    r.best = minimum.x;
    r.best_energy = minimum.energy;
    r.samples.push_back({minimum.x, minimum.energy, 1});
    r.sampling_time_ms = ms;
    return r;
}

SolverResult solve_simulated_annealing(const QuboProblem& problem, std::size_t num_reads,
                                       const AnnealSchedule& schedule, std::uint64_t seed,
                                       unsigned threads) {
    if (num_reads < 1) throw SolverError("num_reads must be at least 1");
    schedule.validate();

    const auto start = Clock::now();
    const CompiledQubo compiled(problem);
    std::vector<SubsetVector> finals(num_reads);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < num_reads; r += stride) {
            finals[r] = anneal_read(compiled, schedule, derive_seed(seed, r)).state;
        }
    };
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(num_reads, 256)));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    auto result = aggregate(problem, std::move(finals), "simulated_annealing");
    result.sampling_time_ms = elapsed_ms(start);
    return result;
}

AnnealSchedule SimulatedAnnealingSolver::schedule_for(const QuboProblem& problem) const {
    auto s = default_schedule(problem, params_.sweeps);
    if (params_.beta_start) s.beta_start = *params_.beta_start;
    if (params_.beta_end) s.beta_end = *params_.beta_end;
    s.validate();
    return s;
}

SolverResult SimulatedAnnealingSolver::solve(const QuboProblem& problem) const {
    return solve_simulated_annealing(problem, params_.num_reads, schedule_for(problem), params_.seed,
                                     params_.threads);
}

}  // namespace qfs
