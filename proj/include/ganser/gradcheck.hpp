// Central finite-difference verification of the reverse-mode gradients.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "ganser/losses.hpp"
#include "ganser/mlp.hpp"
#include "ganser/rng.hpp"

namespace ganser {

enum class LossKind { bce, generator, squared_error };

namespace detail {

inline LossValue eval_loss(LossKind kind, const Matrix& outputs, const Batch& batch) {
    switch (kind) {
        case LossKind::bce:
            if (!batch.targets) throw std::invalid_argument("gradient_check: bce loss requires targets");
            return bce_loss(outputs, *batch.targets);
        case LossKind::generator:
            return generator_loss(outputs);
        case LossKind::squared_error:
            if (!batch.targets) throw std::invalid_argument("gradient_check: squared_error loss requires targets");
            return squared_error_loss(outputs, *batch.targets);
    }
    throw std::invalid_argument("gradient_check: unknown loss kind");
}

}  // namespace detail

// Max over all parameters of |analytic - numeric| / max(1, |analytic| + |numeric|).
inline double gradient_check(const MlpNetwork& net, const Batch& batch, LossKind kind, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) throw std::invalid_argument("gradient_check: eps must be in [1e-7, 1e-3]");

    ActivationTrace trace = forward(net, batch);
    LossValue loss = detail::eval_loss(kind, trace.outputs(), batch);
    Gradients analytic = backward(net, trace, loss.grad);

    MlpNetwork probe = net;
    auto loss_at = [&]() { return detail::eval_loss(kind, forward(probe, batch).outputs(), batch).value; };

    double worst = 0.0;
    auto check_one = [&](double& param, double analytic_g) {
        const double saved = param;
        param = saved + eps;
        const double up = loss_at();
        param = saved - eps;
        const double down = loss_at();
        param = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double rel = std::fabs(analytic_g - numeric) /
                           std::max(1.0, std::fabs(analytic_g) + std::fabs(numeric));
        if (rel > worst) worst = rel;
    };

    for (int l = 0; l < probe.layer_count(); ++l) {
        for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i)
            check_one(probe.weights[l].data[i], analytic.weights[l].data[i]);
        for (std::size_t i = 0; i < probe.biases[l].size(); ++i)
            check_one(probe.biases[l][i], analytic.biases[l][i]);
    }
    return worst;
}

// Random-configuration sweep used by the CLI gradcheck command and the
// acceptance suite: small nets, all three losses, eps 1e-5.
inline double run_gradcheck_suite(std::uint64_t seed, int configs = 20) {
    Rng rng(mix_seed(seed, 0x67726164));
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        const LossKind kind = static_cast<LossKind>(c % 3);
        const int hidden_layers = rng.uniform_int(3);  // up to 4 weight layers total
        std::vector<int> dims;
        dims.push_back(1 + rng.uniform_int(8));
        for (int h = 0; h < hidden_layers; ++h) dims.push_back(1 + rng.uniform_int(64));
        dims.push_back(kind == LossKind::squared_error ? 1 + rng.uniform_int(6) : 1 + rng.uniform_int(3));
        const HiddenAct hidden = rng.uniform_int(2) == 0 ? HiddenAct::relu : HiddenAct::tanh;
        const OutputAct output = kind == LossKind::squared_error ? OutputAct::linear : OutputAct::sigmoid;

        // The probe must keep relu pre-activations clear of their kink (a
        // central difference stepping across it corrupts the numeric
        // derivative) and sigmoid outputs out of the clamp band (where the
        // clamped loss surface goes flat). Narrow nets with zero biases can
        // park a whole layer exactly on the kink, so redraw the weights when
        // no batch is well posed.
        const int n = 2 + rng.uniform_int(4);
        MlpNetwork net;
        Batch batch;
        bool well_posed = false;
        for (int net_draw = 0; net_draw < 25 && !well_posed; ++net_draw) {
            net = make_mlp(dims, hidden, output, rng);
            for (int attempt = 0; attempt < 40 && !well_posed; ++attempt) {
                batch.inputs = Matrix(n, dims.front());
                for (double& v : batch.inputs.data) v = rng.normal();
                const ActivationTrace trace = forward(net, batch.inputs);
                well_posed = true;
                if (hidden == HiddenAct::relu)
                    for (std::size_t l = 0; well_posed && l + 1 < trace.pre.size(); ++l)
                        for (double z : trace.pre[l].data)
                            if (std::fabs(z) < 1e-3) {
                                well_posed = false;
                                break;
                            }
                if (output == OutputAct::sigmoid)
                    for (double z : trace.pre.back().data)
                        if (std::fabs(z) > 12.0) {
                            well_posed = false;
                            break;
                        }
            }
        }
        if (kind != LossKind::generator) {
            Matrix t(n, dims.back());
            for (double& v : t.data)
                v = kind == LossKind::bce ? static_cast<double>(rng.uniform_int(2)) : rng.normal();
            batch.targets = std::move(t);
        }
        worst = std::max(worst, gradient_check(net, batch, kind, 1e-5));
    }
    return worst;
}

}  // namespace ganser
