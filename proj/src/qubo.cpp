#include "qfs/qubo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace qfs {

SubsetVector::SubsetVector(std::vector<std::uint8_t> b) : bits(std::move(b)) {
    for (auto& v : bits) {
        if (v > 1) throw QuboError("subset bits must be 0 or 1");
    }
}

SubsetVector SubsetVector::from_code(std::uint64_t code, std::size_t n) {
    SubsetVector x(n);
    for (std::size_t i = 0; i < n && i < 64; ++i) x.bits[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return x;
}

std::vector<std::size_t> SubsetVector::selected_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out.push_back(i);
    }
    return out;
}

std::size_t SubsetVector::count() const noexcept {
    return static_cast<std::size_t>(std::ranges::count(bits, std::uint8_t{1}));
}

bool code_less(const SubsetVector& a, const SubsetVector& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a.bits[i] != b.bits[i]) return a.bits[i] < b.bits[i];
    }
    return false;
}

// ---------------------------------------------------------------------------

void QuboProblem::check_index(std::size_t i) const {
    if (i >= n_) {
        throw QuboError("variable index " + std::to_string(i) + " out of range for n=" +
                        std::to_string(n_));
    }
}

void QuboProblem::check_finite(double value) {
    if (!std::isfinite(value)) throw QuboError("QUBO coefficients must be finite");
}

void QuboProblem::set_linear(std::size_t i, double value) {
    check_index(i);
    check_finite(value);
    if (value == 0.0) {
        linear_.erase(i);
    } else {
        linear_[i] = value;
    }
}

void QuboProblem::add_linear(std::size_t i, double value) { set_linear(i, linear(i) + value); }

void QuboProblem::set_quadratic(std::size_t i, std::size_t j, double value) {
    check_index(i);
    check_index(j);
    if (i >= j) {
        throw QuboError("quadratic key (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") must satisfy i < j");
    }
    check_finite(value);
    if (value == 0.0) {
        quadratic_.erase({i, j});
    } else {
        quadratic_[{i, j}] = value;
    }
}

void QuboProblem::add_quadratic(std::size_t i, std::size_t j, double value) {
    set_quadratic(i, j, quadratic(i, j) + value);
}

double QuboProblem::linear(std::size_t i) const {
    check_index(i);
    auto it = linear_.find(i);
    return it == linear_.end() ? 0.0 : it->second;
}

double QuboProblem::quadratic(std::size_t i, std::size_t j) const {
    check_index(i);
    check_index(j);
    auto it = quadratic_.find({i, j});
    return it == quadratic_.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------

MiQuboWeights::MiQuboWeights(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
        throw QuboError("alpha and beta must lie in [0, 1]");
    }
    if (std::abs(alpha + beta - 1.0) > 1e-12) {
        throw QuboError("alpha + beta must equal 1 (got " + std::to_string(alpha + beta) + ")");
    }
}

namespace {

// Shared by energy() and the enumerator so both produce bit-identical sums.
// Active terms are summed in ascending order, so states whose active terms form
// the same multiset (swapping a feature for an exact copy) tie exactly.
template <class BitAt>
double energy_impl(const QuboProblem& problem, BitAt bit) {
    std::vector<double> terms;
    for (const auto& [i, q] : problem.linear_terms()) {
        if (bit(i)) terms.push_back(q);
    }
    for (const auto& [key, q] : problem.quadratic_terms()) {
        if (bit(key.first) && bit(key.second)) terms.push_back(q);
    }
    return ordered_sum(terms);
}

}  // namespace

double ordered_sum(std::vector<double>& terms) {
    std::ranges::sort(terms);
    double e = 0.0;
    for (double t : terms) e += t;
    return e;
}

double energy(const QuboProblem& problem, const SubsetVector& x) {
    if (x.size() != problem.size()) {
        throw QuboError("subset has " + std::to_string(x.size()) + " bits, problem has " +
                        std::to_string(problem.size()) + " variables");
    }
    return energy_impl(problem, [&](std::size_t i) { return x.bits[i] != 0; });
}

QuboProblem build_mi_qubo(const MiStatistics& mi, const MiQuboWeights& weights) {
    mi.validate();
    QuboProblem q(mi.n);
    for (std::size_t i = 0; i < mi.n; ++i) {
        q.set_linear(i, -weights.alpha() * mi.target_mi[i]);
        for (std::size_t j = i + 1; j < mi.n; ++j) {
            q.set_quadratic(i, j, weights.beta() * mi.pair_mi[i][j]);
        }
    }
    return q;
}

QuboProblem linear_combination(double a, const QuboProblem& p1, double b, const QuboProblem& p2) {
    if (p1.size() != p2.size()) throw QuboError("problem sizes differ");
    QuboProblem out(p1.size());
    for (const auto& [i, v] : p1.linear_terms()) out.add_linear(i, a * v);
    for (const auto& [i, v] : p2.linear_terms()) out.add_linear(i, b * v);
    for (const auto& [k, v] : p1.quadratic_terms()) out.add_quadratic(k.first, k.second, a * v);
    for (const auto& [k, v] : p2.quadratic_terms()) out.add_quadratic(k.first, k.second, b * v);
    return out;
}

QuboMinimum brute_force_minimum(const QuboProblem& problem) {
    const auto n = problem.size();
    if (n > kMaxExhaustiveVariables) {
        throw QuboError("exhaustive search limited to " + std::to_string(kMaxExhaustiveVariables) +
                        " variables, problem has " + std::to_string(n));
    }
    if (n == 0) return {SubsetVector(0), 0.0};

    // Gray-code walk with O(degree) updates; only states whose running energy
    // is within `tol` of the best are re-evaluated exactly.
    std::vector<double> lin(n, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    double magnitude = 0.0;
    for (const auto& [i, q] : problem.linear_terms()) {
        lin[i] = q;
        magnitude += std::abs(q);
    }
    for (const auto& [k, q] : problem.quadratic_terms()) {
        adj[k.first].emplace_back(k.second, q);
        adj[k.second].emplace_back(k.first, q);
        magnitude += std::abs(q);
    }
    const double tol = 1e-9 * (1.0 + magnitude);

    auto exact = [&](std::uint64_t code) {
        return energy_impl(problem, [code](std::size_t i) { return ((code >> i) & 1U) != 0; });
    };

    std::uint64_t best_code = 0;
    double best = 0.0;  // empty subset
    std::uint64_t code = 0;
    double running = 0.0;
    const std::uint64_t total = 1ULL << n;
    for (std::uint64_t step = 1; step < total; ++step) {
        auto i = static_cast<std::size_t>(std::countr_zero(step));
        double field = lin[i];
        for (const auto& [j, q] : adj[i]) {
            if ((code >> j) & 1U) field += q;
        }
        const bool was_set = (code >> i) & 1U;
        running += was_set ? -field : field;
        code ^= 1ULL << i;
        if (running <= best + tol) {
            double e = exact(code);
            if (e < best || (e == best && code < best_code)) {
                best = e;
                best_code = code;
            }
        }
    }
    return {SubsetVector::from_code(best_code, n), best};
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const QuboProblem& problem) {
    nlohmann::json lin = nlohmann::json::array();
    for (const auto& [i, v] : problem.linear_terms()) lin.push_back({i, v});
    nlohmann::json quad = nlohmann::json::array();
    for (const auto& [k, v] : problem.quadratic_terms()) quad.push_back({k.first, k.second, v});
    return {{"n", problem.size()}, {"linear", std::move(lin)}, {"quadratic", std::move(quad)}};
}

QuboProblem qubo_from_json(const nlohmann::json& j) {
    try {
        auto n = j.at("n").get<std::size_t>();
        QuboProblem q(n);
        for (const auto& term : j.at("linear")) {
            if (!term.is_array() || term.size() != 2) throw QuboError("linear term must be [i, v]");
            q.add_linear(term[0].get<std::size_t>(), term[1].get<double>());
        }
        for (const auto& term : j.at("quadratic")) {
            if (!term.is_array() || term.size() != 3) throw QuboError("quadratic term must be [i, j, v]");
            q.add_quadratic(term[0].get<std::size_t>(), term[1].get<std::size_t>(), term[2].get<double>());
        }
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw QuboError(std::string("malformed QUBO JSON: ") + e.what());
    }
}

nlohmann::json to_json(const SubsetVector& x) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto b : x.bits) arr.push_back(static_cast<int>(b));
    return arr;
}

SubsetVector subset_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw QuboError("bit vector must be a JSON array");
    std::vector<std::uint8_t> bits;
    bits.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw QuboError("bit vector entries must be integers 0 or 1");
        auto b = v.get<int>();
        if (b != 0 && b != 1) throw QuboError("bit vector entries must be 0 or 1");
        bits.push_back(static_cast<std::uint8_t>(b));
    }
    return SubsetVector(std::move(bits));
}

}  // namespace qfs
