// Fixed-topology fully-connected networks with exact reverse-mode gradients.
// All trainable models in the repo (generators, discriminators, encoders,
// decoders) are instances of MlpNetwork.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/matrix.hpp"
#include "ganser/rng.hpp"

namespace ganser {

enum class HiddenAct : std::uint8_t { relu = 0, tanh = 1 };
enum class OutputAct : std::uint8_t { linear = 0, sigmoid = 1 };

// Sigmoid outputs are clamped to [kProbClamp, 1 - kProbClamp] so the log
// losses stay finite.
constexpr double kProbClamp = 1e-7;

struct MlpNetwork {
    std::vector<int> layer_dims;           // input width through output width
    std::vector<Matrix> weights;           // weights[l]: (layer_dims[l+1], layer_dims[l])
    std::vector<std::vector<double>> biases;
    HiddenAct hidden_act = HiddenAct::relu;
    OutputAct output_act = OutputAct::linear;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
};

struct Batch {
    Matrix inputs;                  // n_samples x input_dim
    std::optional<Matrix> targets;  // loss-dependent
};

struct ActivationTrace {
    Matrix input;
    std::vector<Matrix> pre;   // affine outputs per layer
    std::vector<Matrix> post;  // activations per layer; post.back() is the network output
    const Matrix& outputs() const { return post.back(); }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    Matrix input;  // gradient w.r.t. the batch inputs, for chaining through stacked nets
};

inline void validate_network(const MlpNetwork& net) {
    if (net.layer_dims.size() < 2) throw std::invalid_argument("MlpNetwork: need at least input and output dims");
    for (int d : net.layer_dims)
        if (d <= 0) throw std::invalid_argument("MlpNetwork: layer dims must be positive");
    if (net.weights.size() != net.layer_dims.size() - 1 || net.biases.size() != net.weights.size())
        throw std::invalid_argument("MlpNetwork: parameter count does not match layer_dims");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (net.weights[l].rows != net.layer_dims[l + 1] || net.weights[l].cols != net.layer_dims[l])
            throw std::invalid_argument("MlpNetwork: weight shape mismatch at layer " + std::to_string(l));
        if (static_cast<int>(net.biases[l].size()) != net.layer_dims[l + 1])
            throw std::invalid_argument("MlpNetwork: bias length mismatch at layer " + std::to_string(l));
    }
}

// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline MlpNetwork make_mlp(const std::vector<int>& dims, HiddenAct hidden, OutputAct output, Rng& rng) {
    MlpNetwork net;
    net.layer_dims = dims;
    net.hidden_act = hidden;
    net.output_act = output;
    if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output dims");
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] <= 0 || dims[l + 1] <= 0) throw std::invalid_argument("make_mlp: layer dims must be positive");
        const double bound = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
        Matrix w(dims[l + 1], dims[l]);
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(dims[l + 1], 0.0);
    }
    return net;
}

inline ActivationTrace forward(const MlpNetwork& net, const Matrix& inputs) {
    if (inputs.cols != net.input_dim())
        throw std::invalid_argument("forward: batch width " + std::to_string(inputs.cols) +
                                    " does not match network input dim " + std::to_string(net.input_dim()));
    ActivationTrace trace;
    trace.input = inputs;
    const Matrix* current = &trace.input;
    const int layers = net.layer_count();
    for (int l = 0; l < layers; ++l) {
        Matrix z = matmul_bt(*current, net.weights[l]);
        add_row_vector(z, net.biases[l]);
        if (!all_finite(z))
            throw std::runtime_error("forward: non-finite value at layer " + std::to_string(l));
        Matrix a = z;
        if (l + 1 < layers) {
            switch (net.hidden_act) {
                case HiddenAct::relu:
                    for (double& v : a.data) v = v > 0.0 ? v : 0.0;
                    break;
                case HiddenAct::tanh:
                    for (double& v : a.data) v = std::tanh(v);
                    break;
            }
        } else if (net.output_act == OutputAct::sigmoid) {
            for (double& v : a.data) {
                v = 1.0 / (1.0 + std::exp(-v));
                if (v < kProbClamp) v = kProbClamp;
                if (v > 1.0 - kProbClamp) v = 1.0 - kProbClamp;
            }
        }
        trace.pre.push_back(std::move(z));
        trace.post.push_back(std::move(a));
        current = &trace.post.back();
    }
    return trace;
}

inline ActivationTrace forward(const MlpNetwork& net, const Batch& batch) { return forward(net, batch.inputs); }

inline Gradients backward(const MlpNetwork& net, const ActivationTrace& trace, const Matrix& output_grad) {
    const int layers = net.layer_count();
    if (static_cast<int>(trace.pre.size()) != layers || static_cast<int>(trace.post.size()) != layers)
        throw std::invalid_argument("backward: trace does not match network layer count");
    if (trace.input.cols != net.input_dim())
        throw std::invalid_argument("backward: trace input width does not match network");
    if (!output_grad.same_shape(trace.post.back()))
        throw std::invalid_argument("backward: output_grad shape " + output_grad.shape_str() +
                                    " does not match outputs " + trace.post.back().shape_str());
    for (int l = 0; l < layers; ++l)
        if (trace.pre[l].cols != net.layer_dims[l + 1])
            throw std::invalid_argument("backward: trace width mismatch at layer " + std::to_string(l));

    Gradients grads;
    grads.weights.resize(layers);
    grads.biases.resize(layers);

    // dL/d(pre-activation) of the output layer
    Matrix dz = output_grad;
    if (net.output_act == OutputAct::sigmoid) {
        const Matrix& y = trace.post.back();
        for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] *= y.data[i] * (1.0 - y.data[i]);
    }

    for (int l = layers - 1; l >= 0; --l) {
        const Matrix& below = (l == 0) ? trace.input : trace.post[l - 1];
        grads.weights[l] = matmul_at(dz, below);
        grads.biases[l] = column_sums(dz);
        Matrix da = matmul(dz, net.weights[l]);  // gradient w.r.t. the layer input
        if (l == 0) {
            grads.input = std::move(da);
            break;
        }
        dz = std::move(da);
        const Matrix& h = trace.post[l - 1];
        switch (net.hidden_act) {
            case HiddenAct::relu:
                for (std::size_t i = 0; i < dz.data.size(); ++i)
                    if (h.data[i] <= 0.0) dz.data[i] = 0.0;
                break;
            case HiddenAct::tanh:
                for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] *= 1.0 - h.data[i] * h.data[i];
                break;
        }
    }
    return grads;
}

}  // namespace ganser
