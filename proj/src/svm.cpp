#include "qfs/svm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qfs/random.hpp"

namespace qfs {

double LinearSvmModel::decision(std::span<const double> x) const {
    if (x.size() != weights.size()) {
        throw SvmError("input has " + std::to_string(x.size()) + " features, model expects " +
                       std::to_string(weights.size()));
    }
    double s = bias;
    for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * x[j];
    return s;
}

namespace {

struct UniqueRows {
    std::vector<std::size_t> first_index;  // representative row in the input
    std::vector<double> weight;            // multiplicity, normalised to mean 1
};

UniqueRows group_rows(const Matrix& x, std::span<const int> y) {
    std::map<std::pair<std::vector<double>, int>, std::size_t> slot;
    UniqueRows u;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto [it, inserted] = slot.try_emplace({x[i], y[i]}, u.first_index.size());
        if (inserted) {
            u.first_index.push_back(i);
            counts.push_back(0);
        }
        ++counts[it->second];
    }
    const double scale = static_cast<double>(u.first_index.size()) / static_cast<double>(x.size());
    for (auto c : counts) u.weight.push_back(static_cast<double>(c) * scale);
    return u;
}

void check_inputs(const Matrix& x, std::span<const int> y, const SvmParams& params) {
    if (x.size() != y.size()) throw SvmError("x and y lengths differ");
    if (x.empty()) throw SvmError("no training samples");
    if (!(params.c > 0.0) || !std::isfinite(params.c)) throw SvmError("c must be positive");
    if (params.epochs < 1) throw SvmError("epochs must be at least 1");
    const auto d = x.front().size();
    bool has[2] = {false, false};
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != d) throw SvmError("ragged feature matrix");
        for (double v : x[i]) {
            if (!std::isfinite(v)) throw SvmError("non-finite feature value");
        }
        if (y[i] != 0 && y[i] != 1) throw SvmError("labels must be 0 or 1");
        has[y[i]] = true;
    }
    if (!has[0] || !has[1]) throw SvmError("training data must contain both classes");
}

}  // namespace

LinearSvmModel fit_svm_observed(const Matrix& x, std::span<const int> y, const SvmParams& params,
                                const EpochObserver& observer) {
    check_inputs(x, y, params);
    const auto d = x.front().size();
    const auto rows = group_rows(x, y);
    const auto m = rows.first_index.size();
    const double lambda = 1.0 / (params.c * static_cast<double>(m));
    const double radius = 1.0 / std::sqrt(lambda);

    // w[d] is the bias weight on a constant-1 input.
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> avg(d + 1, 0.0);
    std::vector<std::size_t> order(m);
    std::uint64_t t = 0;

    LinearSvmModel model;
    model.c = params.c;
    model.epochs = params.epochs;
    model.seed = params.seed;
    model.trained = true;
    auto publish = [&] {
        model.weights.assign(avg.begin(), avg.begin() + static_cast<std::ptrdiff_t>(d));
        model.bias = avg[d];
    };

    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(params.seed, epoch));
        rng.shuffle(order.begin(), order.end());
        for (auto u : order) {
            ++t;
            const auto& xi = x[rows.first_index[u]];
            const double yi = y[rows.first_index[u]] == 1 ? 1.0 : -1.0;
            const double eta = 1.0 / (lambda * static_cast<double>(t));

            double margin = w[d];
            for (std::size_t j = 0; j < d; ++j) margin += w[j] * xi[j];
            margin *= yi;

            const double shrink = 1.0 - eta * lambda;
            for (auto& wj : w) wj *= shrink;
            if (margin < 1.0) {
                const double step = eta * rows.weight[u] * yi;
                for (std::size_t j = 0; j < d; ++j) w[j] += step * xi[j];
                w[d] += step;
            }

            double norm2 = 0.0;
            for (double wj : w) norm2 += wj * wj;
            if (norm2 > radius * radius) {
                const double s = radius / std::sqrt(norm2);
                for (auto& wj : w) wj *= s;
            }

            const double k = 1.0 / static_cast<double>(t);
            for (std::size_t j = 0; j <= d; ++j) avg[j] += (w[j] - avg[j]) * k;
        }
        if (observer) {
            publish();
            observer(epoch, model);
        }
    }
    publish();
    return model;
}

LinearSvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params) {
    return fit_svm_observed(x, y, params, {});
}

std::vector<int> predict(const LinearSvmModel& model, const Matrix& x) {
    if (!model.trained) throw SvmError("model has not been trained");
    std::vector<int> out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(model.decision(row) > 0.0 ? 1 : 0);
    return out;
}

double mean_hinge_loss(const LinearSvmModel& model, const Matrix& x, std::span<const int> y) {
    if (x.size() != y.size() || x.empty()) throw SvmError("x and y lengths differ or are empty");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = y[i] == 1 ? 1.0 : -1.0;
        total += std::max(0.0, 1.0 - yi * model.decision(x[i]));
    }
    return total / static_cast<double>(x.size());
}

nlohmann::json to_json(const LinearSvmModel& model) {
    return {{"weights", model.weights}, {"bias", model.bias},   {"c", model.c},
            {"epochs", model.epochs},   {"seed", model.seed},   {"feature_names", model.feature_names}};
}

LinearSvmModel svm_model_from_json(const nlohmann::json& j) {
    try {
        LinearSvmModel m;
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.c = j.at("c").get<double>();
        m.epochs = j.at("epochs").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.feature_names = j.value("feature_names", std::vector<std::string>{});
        for (double w : m.weights) {
            if (!std::isfinite(w)) throw SvmError("model weights must be finite");
        }
        m.trained = true;
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SvmError(std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace qfs
