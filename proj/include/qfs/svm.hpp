#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfs {

class SvmError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Matrix = std::vector<std::vector<double>>;

struct SvmParams {
    double c = 1.0;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    double c = 1.0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;
    bool trained = false;

    double decision(std::span<const double> x) const;
};

/// Linear SVM trained by Pegasos-style stochastic subgradient descent on
///   lambda/2 * |w|^2 + mean hinge loss,  lambda = 1 / (c * m)
/// where m counts distinct (row, label) pairs and repeated rows enter the loss
/// with their multiplicity. The bias is an extra weight on a constant-1 input.
/// Returns the average of all iterates. Labels are 0/1; training uses -1/+1.
LinearSvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params = {});

/// Label 1 iff w.x + b > 0.
std::vector<int> predict(const LinearSvmModel& model, const Matrix& x);

/// Mean hinge loss of the model over (x, y) with 0/1 labels.
double mean_hinge_loss(const LinearSvmModel& model, const Matrix& x, std::span<const int> y);

nlohmann::json to_json(const LinearSvmModel& model);
LinearSvmModel svm_model_from_json(const nlohmann::json& j);

/// Observer invoked after every epoch with the averaged iterate so far.
using EpochObserver = std::function<void(std::size_t epoch, const LinearSvmModel& averaged)>;
LinearSvmModel fit_svm_observed(const Matrix& x, std::span<const int> y, const SvmParams& params,
                                const EpochObserver& observer);

}  // namespace qfs
