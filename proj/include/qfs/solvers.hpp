#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfs/dataset.hpp"
#include "qfs/qubo.hpp"

namespace qfs {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Sample {
    SubsetVector bits;
    double energy = 0.0;
    std::size_t count = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct SolverResult {
    SubsetVector best;
    double best_energy = 0.0;
    /// Distinct final states, ordered by energy, then by code.
    std::vector<Sample> samples;
    double sampling_time_ms = 0.0;
    std::string solver_name;
    std::size_t num_reads = 0;

    /// Checks the bookkeeping invariants against `problem`; throws SolverError.
    void check(const QuboProblem& problem) const;
};

nlohmann::json to_json(const SolverResult& result);
SolverResult solver_result_from_json(const nlohmann::json& j);

/// Geometric inverse-temperature ramp over `sweeps` full passes.
struct AnnealSchedule {
    std::size_t sweeps = 1000;
    double beta_start = 0.1;
    double beta_end = 10.0;
    /// Finish each read with a zero-temperature descent over single flips and
    /// pair swaps, ordered by exact energy and then by code.
    bool polish = true;

    void validate() const;
    double beta_at(std::size_t sweep) const;
};

inline constexpr std::size_t kDefaultSweeps = 1000;

/// beta_start = ln 2 / (largest single-flip change), beta_end = ln 100 / (smallest
/// nonzero coefficient magnitude). An all-zero problem gets 0.1 -> 10 and a warning.
AnnealSchedule default_schedule(const QuboProblem& problem, std::size_t sweeps = kDefaultSweeps,
                                const WarningSink& warn = stderr_warnings());

/// Adjacency-list form of a QuboProblem for O(degree) flip deltas.
class CompiledQubo {
public:
    explicit CompiledQubo(const QuboProblem& problem);

    std::size_t size() const noexcept { return linear_.size(); }

    /// energy(x with bit i flipped) - energy(x).
    double flip_delta(const std::vector<std::uint8_t>& bits, std::size_t i) const {
        const double field = local_field(bits, i);
        return bits[i] ? -field : field;
    }

    /// Same value as energy(problem, x) for the problem this was built from.
    double exact_energy(const std::vector<std::uint8_t>& bits) const;

    /// q_ij for i != j; only available when has_dense().
    bool has_dense() const noexcept { return !dense_.empty(); }
    double coupling(std::size_t i, std::size_t j) const { return dense_[i * size() + j]; }

    double linear(std::size_t i) const { return linear_[i]; }

    /// linear[i] + sum of q_ij over set neighbours j.
    double local_field(const std::vector<std::uint8_t>& bits, std::size_t i) const {
        double field = linear_[i];
        for (auto k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            if (bits[neighbours_[k]]) field += weights_[k];
        }
        return field;
    }

private:
    std::vector<double> linear_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> neighbours_;
    std::vector<double> weights_;
    std::vector<double> dense_;
};

/// Problems up to this size keep a dense coupling matrix, which enables pair-swap
/// moves in the final descent.
inline constexpr std::size_t kDenseCouplingLimit = 512;

double incremental_flip_delta(const CompiledQubo& compiled, const SubsetVector& x, std::size_t i);
double incremental_flip_delta(const QuboProblem& problem, const SubsetVector& x, std::size_t i);

/// Final state of one annealing read and the energy tracked through its accepted flips.
struct ReadOutcome {
    SubsetVector state;
    double tracked_energy = 0.0;
};

/// One read: random start, then `sweeps` passes of sequential single-bit
/// Metropolis updates. Zero-delta moves are taken only when they clear a bit.
/// With schedule.polish the read ends in a state no single flip or pair swap
/// improves in (exact energy, code) order.
ReadOutcome anneal_read(const CompiledQubo& problem, const AnnealSchedule& schedule,
                        std::uint64_t read_seed);

SolverResult solve_exhaustive(const QuboProblem& problem);

/// Read r uses derive_seed(seed, r); output does not depend on `threads`.
SolverResult solve_simulated_annealing(const QuboProblem& problem, std::size_t num_reads,
                                       const AnnealSchedule& schedule, std::uint64_t seed,
                                       unsigned threads = 1);

/// Common interface over local and remote backends.
class Solver {
public:
    virtual ~Solver() = default;
    virtual std::string name() const = 0;
    virtual SolverResult solve(const QuboProblem& problem) const = 0;
};

class ExhaustiveSolver final : public Solver {
public:
    std::string name() const override { return "exhaustive"; }
    SolverResult solve(const QuboProblem& problem) const override { return solve_exhaustive(problem); }
};

struct AnnealParams {
    std::size_t num_reads = 100;
    std::size_t sweeps = kDefaultSweeps;
    /// Each one, when set, replaces the derived value.
    std::optional<double> beta_start;
    std::optional<double> beta_end;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

class SimulatedAnnealingSolver final : public Solver {
public:
    explicit SimulatedAnnealingSolver(AnnealParams params) : params_(params) {}
    std::string name() const override { return "simulated_annealing"; }
    SolverResult solve(const QuboProblem& problem) const override;
    AnnealSchedule schedule_for(const QuboProblem& problem) const;

private:
    AnnealParams params_;
};

}  // namespace qfs
