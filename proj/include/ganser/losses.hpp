// Scalar losses with gradients w.r.t. the predictions. Probabilities are
// clamped away from {0, 1} before any log.
#pragma once

#include <cmath>
#include <stdexcept>

#include "ganser/matrix.hpp"
#include "ganser/mlp.hpp"

namespace ganser {

struct LossValue {
    double value = 0.0;
    Matrix grad;  // same shape as the predictions
};

inline double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

// Mean of -y*log(p) - (1-y)*log(1-p) over all entries; targets must be 0 or 1.
inline LossValue bce_loss(const Matrix& predictions, const Matrix& targets) {
    if (predictions.empty()) throw std::invalid_argument("bce_loss: empty input");
    if (!predictions.same_shape(targets))
        throw std::invalid_argument("bce_loss: prediction shape " + predictions.shape_str() +
                                    " does not match targets " + targets.shape_str());
    const double n = static_cast<double>(predictions.data.size());
    LossValue out;
    out.grad = Matrix(predictions.rows, predictions.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.data.size(); ++i) {
        const double y = targets.data[i];
        if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce_loss: targets must be 0 or 1");
        const double p = clamp_prob(predictions.data[i]);
        total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        out.grad.data[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    out.value = total / n;
    return out;
}

// Mean of -log(p): the generator's side of the saturating GAN objective.
inline LossValue generator_loss(const Matrix& disc_outputs_on_fake) {
    if (disc_outputs_on_fake.empty()) throw std::invalid_argument("generator_loss: empty input");
    const double n = static_cast<double>(disc_outputs_on_fake.data.size());
    LossValue out;
    out.grad = Matrix(disc_outputs_on_fake.rows, disc_outputs_on_fake.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < disc_outputs_on_fake.data.size(); ++i) {
        const double p = clamp_prob(disc_outputs_on_fake.data[i]);
        total += -std::log(p);
        out.grad.data[i] = -1.0 / (p * n);
    }
    out.value = total / n;
    return out;
}

// Mean over rows of the squared reconstruction error.
inline LossValue squared_error_loss(const Matrix& predictions, const Matrix& targets) {
    if (predictions.empty()) throw std::invalid_argument("squared_error_loss: empty input");
    if (!predictions.same_shape(targets))
        throw std::invalid_argument("squared_error_loss: prediction shape " + predictions.shape_str() +
                                    " does not match targets " + targets.shape_str());
    const double n = static_cast<double>(predictions.rows);
    LossValue out;
    out.grad = Matrix(predictions.rows, predictions.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.data.size(); ++i) {
        const double d = predictions.data[i] - targets.data[i];
        total += d * d;
        out.grad.data[i] = 2.0 * d / n;
    }
    out.value = total / n;
    return out;
}

}  // namespace ganser
