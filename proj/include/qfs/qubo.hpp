#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qfs/mutual_info.hpp"

namespace qfs {

class QuboError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Binary assignment over the problem's variables; bit i set means feature i is selected.
struct SubsetVector {
    std::vector<std::uint8_t> bits;

    SubsetVector() = default;
    explicit SubsetVector(std::size_t n) : bits(n, 0) {}
    explicit SubsetVector(std::vector<std::uint8_t> b);

    /// Bit i of `code` becomes x_i.
    static SubsetVector from_code(std::uint64_t code, std::size_t n);

    std::size_t size() const noexcept { return bits.size(); }
    bool operator[](std::size_t i) const { return bits[i] != 0; }
    std::vector<std::size_t> selected_indices() const;
    std::size_t count() const noexcept;

    /// Ordering consistent with the integer value of the code (bit 0 least significant).
    friend bool code_less(const SubsetVector& a, const SubsetVector& b);
    friend bool operator==(const SubsetVector&, const SubsetVector&) = default;
};

/// Sparse upper-triangular QUBO: minimize sum_i q_ii x_i + sum_{i<j} q_ij x_i x_j.
/// Zero coefficients are not stored.
class QuboProblem {
public:
    using Pair = std::pair<std::size_t, std::size_t>;

    QuboProblem() = default;
    explicit QuboProblem(std::size_t n) : n_(n) {}

    std::size_t size() const noexcept { return n_; }

    void set_linear(std::size_t i, double value);
    void add_linear(std::size_t i, double value);
    /// Requires i < j.
    void set_quadratic(std::size_t i, std::size_t j, double value);
    void add_quadratic(std::size_t i, std::size_t j, double value);

    double linear(std::size_t i) const;
    double quadratic(std::size_t i, std::size_t j) const;

    const std::map<std::size_t, double>& linear_terms() const noexcept { return linear_; }
    const std::map<Pair, double>& quadratic_terms() const noexcept { return quadratic_; }

    bool all_zero() const noexcept { return linear_.empty() && quadratic_.empty(); }

    friend bool operator==(const QuboProblem&, const QuboProblem&) = default;

private:
    void check_index(std::size_t i) const;
    static void check_finite(double value);

    std::size_t n_ = 0;
    std::map<std::size_t, double> linear_;
    std::map<Pair, double> quadratic_;
};

/// Relative weights of the relevance and redundancy terms; alpha + beta = 1.
class MiQuboWeights {
public:
    MiQuboWeights() = default;
    MiQuboWeights(double alpha, double beta);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }

private:
    double alpha_ = 0.98;
    double beta_ = 0.02;
};

/// Sorts `terms` and sums them in ascending order, so equal multisets give equal sums.
double ordered_sum(std::vector<double>& terms);

/// Sum of the active coefficients, added in ascending order of value.
double energy(const QuboProblem& problem, const SubsetVector& x);

/// -alpha * target_mi[i] on the diagonal, beta * pair_mi[i][j] above it.
QuboProblem build_mi_qubo(const MiStatistics& mi, const MiQuboWeights& weights);

/// a * p1 + b * p2, coefficient-wise. Sizes must match.
QuboProblem linear_combination(double a, const QuboProblem& p1, double b, const QuboProblem& p2);

inline constexpr std::size_t kMaxExhaustiveVariables = 24;

struct QuboMinimum {
    SubsetVector x;
    double energy = 0.0;
};

/// Exact minimum by enumeration; among equal energies the smallest code wins.
QuboMinimum brute_force_minimum(const QuboProblem& problem);

/// {n, linear: [[i, v]...], quadratic: [[i, j, v]...]}
nlohmann::json to_json(const QuboProblem& problem);
QuboProblem qubo_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SubsetVector& x);
SubsetVector subset_from_json(const nlohmann::json& j);

}  // namespace qfs
