// Adaptive-moment optimizer over MlpNetwork parameters.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/matrix.hpp"
#include "ganser/mlp.hpp"

namespace ganser {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline void validate_adam_config(const AdamConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("AdamConfig: learning_rate must be positive");
    if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0)) throw std::invalid_argument("AdamConfig: beta1 must be in (0,1)");
    if (!(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) throw std::invalid_argument("AdamConfig: beta2 must be in (0,1)");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-4))
        throw std::invalid_argument("AdamConfig: epsilon must be in (0, 1e-4]");
}

struct OptimizerState {
    AdamConfig config;
    long step_count = 0;
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
};

inline OptimizerState make_optimizer(const MlpNetwork& net, const AdamConfig& cfg = {}) {
    validate_adam_config(cfg);
    OptimizerState st;
    st.config = cfg;
    for (int l = 0; l < net.layer_count(); ++l) {
        st.m_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        st.v_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        st.m_biases.emplace_back(net.biases[l].size(), 0.0);
        st.v_biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return st;
}

inline void optimizer_step(MlpNetwork& net, const Gradients& grads, OptimizerState& state) {
    const int layers = net.layer_count();
    if (static_cast<int>(grads.weights.size()) != layers || static_cast<int>(grads.biases.size()) != layers)
        throw std::invalid_argument("optimizer_step: gradient layer count mismatch");
    if (static_cast<int>(state.m_weights.size()) != layers)
        throw std::invalid_argument("optimizer_step: optimizer state does not match network");
    for (int l = 0; l < layers; ++l) {
        if (!grads.weights[l].same_shape(net.weights[l]) ||
            grads.biases[l].size() != net.biases[l].size())
            throw std::invalid_argument("optimizer_step: gradient shape mismatch at layer " + std::to_string(l));
        if (!all_finite(grads.weights[l]) || !all_finite(grads.biases[l]))
            throw std::runtime_error("optimizer_step: non-finite gradient at layer " + std::to_string(l));
    }

    state.step_count += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

    auto update = [&](double& param, double g, double& m, double& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    };

    for (int l = 0; l < layers; ++l) {
        Matrix& w = net.weights[l];
        for (std::size_t i = 0; i < w.data.size(); ++i)
            update(w.data[i], grads.weights[l].data[i], state.m_weights[l].data[i], state.v_weights[l].data[i]);
        std::vector<double>& b = net.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i)
            update(b[i], grads.biases[l][i], state.m_biases[l][i], state.v_biases[l][i]);
        if (!all_finite(w) || !all_finite(b))
            throw std::runtime_error("optimizer_step: non-finite parameter after update at layer " + std::to_string(l));
    }
}

}  // namespace ganser
