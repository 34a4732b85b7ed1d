// Adversarial auto-encoder: compresses feature vectors to 2-D codes whose
// per-class distribution is pushed toward the matching component of a GMM
// prior. The latent discriminator sees the code together with the one-hot
// class, so each class's codes are driven to its own component rather than to
// an arbitrary permutation of them.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/checkpoint.hpp"
#include "ganser/corpus.hpp"
#include "ganser/gmm.hpp"
#include "ganser/losses.hpp"
#include "ganser/mlp.hpp"
#include "ganser/optimizer.hpp"

namespace ganser {

struct AaeConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    // The regularization phase runs on its own optimizer with a higher rate;
    // at the reconstruction rate the codes cannot reach the prior components
    // within any practical epoch budget.
    double adversarial_lr = 5e-3;
    std::uint64_t seed = 1;
    std::vector<int> encoder_hidden = {512, 128};
    std::vector<int> decoder_hidden = {128, 512};
    std::vector<int> disc_hidden = {64, 64};
};

struct AaeLossRecord {
    int epoch = 0;
    double recon_loss = 0.0;
    double adv_disc_loss = 0.0;
    double adv_gen_loss = 0.0;
};

struct AaeModel {
    MlpNetwork encoder;       // feature_dim -> code_dim
    MlpNetwork decoder;       // code_dim -> feature_dim
    MlpNetwork latent_disc;   // code_dim + class_count -> 1, sigmoid
    GmmPrior prior;
    Normalizer norm;

    int feature_dim() const { return encoder.input_dim(); }
    int code_dim() const { return encoder.output_dim(); }
};

struct AaeTrainResult {
    AaeModel model;
    std::vector<AaeLossRecord> history;
};

inline void validate_aae_config(const AaeConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("AaeConfig: epochs and batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("AaeConfig: learning_rate must be positive");
}

inline AaeTrainResult train_aae(const FeatureCorpus& corpus, const GmmPrior& prior, const AaeConfig& cfg = {}) {
    validate_aae_config(cfg);
    validate_prior(prior);
    if (corpus.rows.empty()) throw std::invalid_argument("train_aae: empty corpus");
    if (corpus.classes != prior.class_names)
        throw std::invalid_argument("train_aae: corpus classes do not match prior class names");

    const int d = corpus.feature_dim;
    const int code_dim = prior.dim();
    const int k = prior.component_count();

    Rng rng(mix_seed(cfg.seed, 0x616165));
    AaeModel model;
    model.prior = prior;
    model.norm = fit_normalizer(corpus);

    std::vector<int> enc_dims = {d};
    enc_dims.insert(enc_dims.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
    enc_dims.push_back(code_dim);
    std::vector<int> dec_dims = {code_dim};
    dec_dims.insert(dec_dims.end(), cfg.decoder_hidden.begin(), cfg.decoder_hidden.end());
    dec_dims.push_back(d);
    std::vector<int> disc_dims = {code_dim + k};
    disc_dims.insert(disc_dims.end(), cfg.disc_hidden.begin(), cfg.disc_hidden.end());
    disc_dims.push_back(1);

    // tanh encoder: the aggressive regularization rate can permanently kill
    // relu paths early in training, collapsing every class onto one component.
    model.encoder = make_mlp(enc_dims, HiddenAct::tanh, OutputAct::linear, rng);
    model.decoder = make_mlp(dec_dims, HiddenAct::relu, OutputAct::linear, rng);
    model.latent_disc = make_mlp(disc_dims, HiddenAct::relu, OutputAct::sigmoid, rng);

    OptimizerState enc_opt = make_optimizer(model.encoder, {cfg.learning_rate});
    OptimizerState enc_adv_opt = make_optimizer(model.encoder, {cfg.adversarial_lr});
    OptimizerState dec_opt = make_optimizer(model.decoder, {cfg.learning_rate});
    OptimizerState disc_opt = make_optimizer(model.latent_disc, {cfg.learning_rate});

    const Matrix features = apply_normalizer(model.norm, corpus_features(corpus));
    std::map<std::string, int> class_index;
    for (int c = 0; c < k; ++c) class_index[prior.class_names[c]] = c;
    std::vector<int> row_class(corpus.rows.size());
    for (std::size_t i = 0; i < corpus.rows.size(); ++i) row_class[i] = class_index[corpus.rows[i].label];

    const int n = features.rows;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    AaeTrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double recon_sum = 0.0, disc_sum = 0.0, gen_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int len = std::min(cfg.batch_size, n - start);
            std::vector<int> idx(order.begin() + start, order.begin() + start + len);
            const Matrix xb = take_rows(features, idx);
            std::vector<int> cls(len);
            for (int i = 0; i < len; ++i) cls[i] = row_class[idx[i]];
            const Matrix onehot = one_hot(cls, k);

            // 1) reconstruction step: encoder + decoder on squared error
            {
                ActivationTrace enc_trace = forward(model.encoder, xb);
                ActivationTrace dec_trace = forward(model.decoder, enc_trace.outputs());
                LossValue loss = squared_error_loss(dec_trace.outputs(), xb);
                recon_sum += loss.value;
                Gradients dec_grads = backward(model.decoder, dec_trace, loss.grad);
                Gradients enc_grads = backward(model.encoder, enc_trace, dec_grads.input);
                optimizer_step(model.decoder, dec_grads, dec_opt);
                optimizer_step(model.encoder, enc_grads, enc_opt);
            }

            // 2) latent discriminator step: prior draws from the true-class
            //    component vs. current encoder codes
            {
                Matrix real_z(len, code_dim);
                for (int i = 0; i < len; ++i) {
                    const GmmComponent& comp = model.prior.components[cls[i]];
                    for (int j = 0; j < code_dim; ++j)
                        real_z(i, j) = comp.mean[j] + std::sqrt(comp.covariance[j]) * rng.normal();
                }
                const Matrix fake_z = forward(model.encoder, xb).outputs();
                const Matrix disc_in = vconcat(hconcat(real_z, onehot), hconcat(fake_z, onehot));
                Matrix targets(2 * len, 1);
                for (int i = 0; i < len; ++i) targets(i, 0) = 1.0;
                ActivationTrace disc_trace = forward(model.latent_disc, disc_in);
                LossValue loss = bce_loss(disc_trace.outputs(), targets);
                disc_sum += loss.value;
                Gradients disc_grads = backward(model.latent_disc, disc_trace, loss.grad);
                optimizer_step(model.latent_disc, disc_grads, disc_opt);
            }

            // 3) adversarial encoder step: push codes toward "real" under the
            //    frozen discriminator
            {
                ActivationTrace enc_trace = forward(model.encoder, xb);
                ActivationTrace disc_trace = forward(model.latent_disc, hconcat(enc_trace.outputs(), onehot));
                LossValue loss = generator_loss(disc_trace.outputs());
                gen_sum += loss.value;
                Gradients disc_grads = backward(model.latent_disc, disc_trace, loss.grad);
                Matrix code_grad(len, code_dim);
                for (int i = 0; i < len; ++i)
                    for (int j = 0; j < code_dim; ++j) code_grad(i, j) = disc_grads.input(i, j);
                Gradients enc_grads = backward(model.encoder, enc_trace, code_grad);
                optimizer_step(model.encoder, enc_grads, enc_adv_opt);
            }
            ++batches;
        }
        result.history.push_back(
            {epoch, recon_sum / batches, disc_sum / batches, gen_sum / batches});
    }
    result.model = std::move(model);
    return result;
}

inline Matrix encode(const AaeModel& model, const Matrix& features) {
    if (features.cols != model.feature_dim())
        throw std::invalid_argument("encode: feature width " + std::to_string(features.cols) +
                                    " does not match model feature dim " + std::to_string(model.feature_dim()));
    return forward(model.encoder, apply_normalizer(model.norm, features)).outputs();
}

// Reconstructions on the original feature scale.
inline Matrix decode(const AaeModel& model, const Matrix& codes) {
    if (codes.cols != model.code_dim()) throw std::invalid_argument("decode: code width does not match model");
    return invert_normalizer(model.norm, forward(model.decoder, codes).outputs());
}

// Deep copy of the decoder for generator initialization.
inline MlpNetwork decoder_weights(const AaeModel& model) { return model.decoder; }

inline void save_aae(const std::string& path, const AaeModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_aae: cannot open " + path);
    write_checkpoint_header(os);
    io::write_u8(os, kKindAae);
    write_network_block(os, model.encoder);
    write_network_block(os, model.decoder);
    write_network_block(os, model.latent_disc);
    io::write_f64_vector(os, model.norm.mean);
    io::write_f64_vector(os, model.norm.stddev);
    io::write_string(os, prior_to_string(model.prior));
    if (!os) throw std::runtime_error("save_aae: write failed for " + path);
}

inline AaeModel load_aae(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_aae: cannot open " + path);
    read_checkpoint_header(is);
    if (io::read_u8(is) != kKindAae) throw std::runtime_error("load_aae: not an AAE checkpoint: " + path);
    AaeModel model;
    model.encoder = read_network_block(is);
    model.decoder = read_network_block(is);
    model.latent_disc = read_network_block(is);
    model.norm.mean = io::read_f64_vector(is);
    model.norm.stddev = io::read_f64_vector(is);
    model.prior = prior_from_string(io::read_string(is));
    return model;
}

}  // namespace ganser
