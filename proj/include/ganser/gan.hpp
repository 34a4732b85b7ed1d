// Vanilla GAN over 2-D codes and conditional GAN over feature vectors, with
// the baseline and improved training schedules and per-epoch loss histories
// on the train and validation splits.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/aae.hpp"
#include "ganser/checkpoint.hpp"
#include "ganser/corpus.hpp"
#include "ganser/gmm.hpp"
#include "ganser/losses.hpp"
#include "ganser/mlp.hpp"
#include "ganser/optimizer.hpp"

namespace ganser {

struct TrainSchedule {
    double gen_lr = 2e-4;
    double disc_lr = 2e-4;
    int gen_steps_per_disc_step = 1;
    int epochs = 300;
    int batch_size = 64;
    enum class Init { random, from_decoder } init = Init::random;
    std::uint64_t seed = 1;
};

// Generator learning rate kept above the discriminator's (1e-3 vs 1e-4) and
// five generator iterations per discriminator iteration.
inline TrainSchedule improved_schedule() {
    TrainSchedule s;
    s.gen_lr = 1e-3;
    s.disc_lr = 1e-4;
    s.gen_steps_per_disc_step = 5;
    s.init = TrainSchedule::Init::from_decoder;
    return s;
}

inline void validate_schedule(const TrainSchedule& s) {
    if (!(s.gen_lr > 0.0 && s.disc_lr > 0.0)) throw std::invalid_argument("TrainSchedule: learning rates must be positive");
    if (s.gen_steps_per_disc_step < 1) throw std::invalid_argument("TrainSchedule: gen_steps_per_disc_step must be >= 1");
    if (s.epochs < 1 || s.batch_size < 1) throw std::invalid_argument("TrainSchedule: epochs and batch_size must be >= 1");
}

enum class Split : std::uint8_t { train = 0, validation = 1 };

inline const char* split_name(Split s) { return s == Split::train ? "train" : "validation"; }

struct LossRecord {
    int step = 0;
    Split split = Split::train;
    double disc_loss = 0.0;
    double gen_loss = 0.0;
};

struct LossHistory {
    std::vector<LossRecord> records;

    void add(int step, Split split, double disc_loss, double gen_loss) {
        if (!(std::isfinite(disc_loss) && std::isfinite(gen_loss)) || disc_loss < 0.0 || gen_loss < 0.0)
            throw std::runtime_error("LossHistory: non-finite or negative loss at step " + std::to_string(step));
        for (auto it = records.rbegin(); it != records.rend(); ++it) {
            if (it->split == split) {
                if (it->step >= step) throw std::runtime_error("LossHistory: steps must increase per split");
                break;
            }
        }
        records.push_back({step, split, disc_loss, gen_loss});
    }

    std::vector<LossRecord> split_records(Split split) const {
        std::vector<LossRecord> out;
        for (const LossRecord& r : records)
            if (r.split == split) out.push_back(r);
        return out;
    }

    // Convergence statistic: mean over the last `fraction` of recorded epochs.
    double final_window_mean_disc(Split split, double fraction = 0.10) const { return window_mean(split, fraction, true); }
    double final_window_mean_gen(Split split, double fraction = 0.10) const { return window_mean(split, fraction, false); }

private:
    double window_mean(Split split, double fraction, bool disc) const {
        const std::vector<LossRecord> recs = split_records(split);
        if (recs.empty()) throw std::invalid_argument("LossHistory: no records for split");
        const int window = std::max<int>(1, static_cast<int>(std::lround(fraction * recs.size())));
        double sum = 0.0;
        for (std::size_t i = recs.size() - window; i < recs.size(); ++i)
            sum += disc ? recs[i].disc_loss : recs[i].gen_loss;
        return sum / window;
    }
};

inline void write_loss_history(std::ostream& os, const LossHistory& history) {
    os << "step,split,disc_loss,gen_loss\n";
    char buf[40];
    for (const LossRecord& r : history.records) {
        os << r.step << "," << split_name(r.split);
        std::snprintf(buf, sizeof buf, "%.17g", r.disc_loss);
        os << "," << buf;
        std::snprintf(buf, sizeof buf, "%.17g", r.gen_loss);
        os << "," << buf << "\n";
    }
}

inline void save_loss_history(const std::string& path, const LossHistory& history) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_loss_history: cannot open " + path);
    write_loss_history(os, history);
}

struct GanModel {
    MlpNetwork generator;
    MlpNetwork discriminator;
    bool conditional = false;
    int latent_dim = 2;
    GmmPrior prior;  // conditional only; one component per class
    Normalizer norm;
    long gen_updates = 0;
    long disc_updates = 0;

    int data_dim() const { return generator.output_dim(); }
    int class_count() const { return conditional ? prior.component_count() : 0; }
};

struct GanTrainResult {
    GanModel model;
    LossHistory history;
};

namespace detail {

// Discriminator loss is the sum of its real and fake binary cross-entropies,
// so an indifferent discriminator (outputs 0.5) sits at 2*ln 2 with the
// generator at ln 2.
struct EpochLosses {
    double disc = 0.0;
    double gen = 0.0;
};

inline EpochLosses eval_gan_losses(const GanModel& model, const Matrix& real_in, const Matrix& fake_gen_in,
                                   const Matrix& fake_disc_extra) {
    const Matrix fake_x = forward(model.generator, fake_gen_in).outputs();
    const Matrix fake_in = fake_disc_extra.cols > 0 ? hconcat(fake_x, fake_disc_extra) : fake_x;
    Matrix ones(real_in.rows, 1);
    for (double& v : ones.data) v = 1.0;
    const Matrix zeros(fake_in.rows, 1);
    const Matrix d_real = forward(model.discriminator, real_in).outputs();
    const Matrix d_fake = forward(model.discriminator, fake_in).outputs();
    EpochLosses out;
    out.disc = bce_loss(d_real, ones).value + bce_loss(d_fake, zeros).value;
    out.gen = generator_loss(d_fake).value;
    return out;
}

}  // namespace detail

// ----- vanilla GAN over codes (and the high-dimensional stress variant)

namespace detail {

inline GanTrainResult train_unconditional(const Matrix& data, const Matrix& val_data, const TrainSchedule& schedule,
                                          const std::vector<int>& gen_dims, const std::vector<int>& disc_dims,
                                          const Normalizer& norm) {
    validate_schedule(schedule);
    if (data.rows == 0) throw std::invalid_argument("gan: empty training data");

    Rng rng(mix_seed(schedule.seed, 0x67616e));
    Rng eval_rng(mix_seed(schedule.seed, 0x6576616c));

    GanModel model;
    model.conditional = false;
    model.latent_dim = gen_dims.front();
    model.norm = norm;
    // tanh generator: a relu generator seeded near the origin loses modes of
    // the multi-island code distribution to dead units.
    model.generator = make_mlp(gen_dims, HiddenAct::tanh, OutputAct::linear, rng);
    model.discriminator = make_mlp(disc_dims, HiddenAct::relu, OutputAct::sigmoid, rng);
    OptimizerState gen_opt = make_optimizer(model.generator, {schedule.gen_lr});
    OptimizerState disc_opt = make_optimizer(model.discriminator, {schedule.disc_lr});

    const int n = data.rows;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    auto sample_latent = [&](Rng& r, int rows) {
        Matrix z(rows, model.latent_dim);
        for (double& v : z.data) v = r.normal();
        return z;
    };

    LossHistory history;
    const Matrix no_extra(0, 0);
    for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += schedule.batch_size) {
            const int len = std::min(schedule.batch_size, n - start);
            try {
                std::vector<int> idx(order.begin() + start, order.begin() + start + len);
                const Matrix real = take_rows(data, idx);

                // discriminator step
                {
                    const Matrix fake = forward(model.generator, sample_latent(rng, len)).outputs();
                    const Matrix disc_in = vconcat(real, fake);
                    Matrix targets(2 * len, 1);
                    for (int i = 0; i < len; ++i) targets(i, 0) = 1.0;
                    ActivationTrace trace = forward(model.discriminator, disc_in);
                    LossValue loss = bce_loss(trace.outputs(), targets);
                    optimizer_step(model.discriminator, backward(model.discriminator, trace, loss.grad), disc_opt);
                    model.disc_updates += 1;
                }
                // generator steps
                for (int s = 0; s < schedule.gen_steps_per_disc_step; ++s) {
                    ActivationTrace gen_trace = forward(model.generator, sample_latent(rng, len));
                    ActivationTrace disc_trace = forward(model.discriminator, gen_trace.outputs());
                    LossValue loss = generator_loss(disc_trace.outputs());
                    Gradients disc_grads = backward(model.discriminator, disc_trace, loss.grad);
                    optimizer_step(model.generator, backward(model.generator, gen_trace, disc_grads.input), gen_opt);
                    model.gen_updates += 1;
                }
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("gan training aborted at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(start / schedule.batch_size) + ": " + e.what());
            }
        }

        EpochLosses train_l = eval_gan_losses(model, data, sample_latent(eval_rng, n), no_extra);
        history.add(epoch, Split::train, train_l.disc, train_l.gen);
        if (val_data.rows > 0) {
            EpochLosses val_l = eval_gan_losses(model, val_data, sample_latent(eval_rng, val_data.rows), no_extra);
            history.add(epoch, Split::validation, val_l.disc, val_l.gen);
        }
    }
    return {std::move(model), std::move(history)};
}

}  // namespace detail

// Codes are z-normalized for training (the generator starts near the origin
// at unit scale, and an unnormalized radius-4 target collapses modes);
// generate() maps samples back to code scale.
inline GanTrainResult train_vanilla_gan(const Matrix& codes, const Matrix& val_codes, const TrainSchedule& schedule) {
    if (codes.cols != 2 || (val_codes.rows > 0 && val_codes.cols != 2))
        throw std::invalid_argument("train_vanilla_gan: codes must be 2-D");
    const Normalizer norm = fit_normalizer(codes);
    const Matrix train_n = apply_normalizer(norm, codes);
    const Matrix val_n = val_codes.rows > 0 ? apply_normalizer(norm, val_codes) : Matrix(0, 2);
    return detail::train_unconditional(train_n, val_n, schedule, {2, 32, 32, 2}, {2, 64, 64, 1}, norm);
}

// The doomed configuration: a 2-D latent pushed straight to feature_dim
// without conditioning. Runs it and returns the history for inspection; makes
// no convergence promise.
inline LossHistory demonstrate_highdim_failure(const FeatureCorpus& corpus, const TrainSchedule& schedule) {
    if (corpus.rows.empty()) throw std::invalid_argument("demonstrate_highdim_failure: empty corpus");
    const std::set<int> sessions = corpus.sessions();
    FeatureCorpus train = corpus, val = corpus;
    if (sessions.size() > 1) {
        auto split = split_by_session(corpus, *sessions.rbegin());
        train = std::move(split.first);
        val = std::move(split.second);
    }
    const Normalizer norm = fit_normalizer(train);
    const Matrix train_x = apply_normalizer(norm, corpus_features(train));
    const Matrix val_x = apply_normalizer(norm, corpus_features(val));
    const int d = corpus.feature_dim;
    return detail::train_unconditional(train_x, val_x, schedule, {2, 128, 512, d}, {d, 512, 128, 1}, norm).history;
}

// ----- conditional GAN over feature vectors

inline GanTrainResult train_conditional_gan(const FeatureCorpus& corpus, const FeatureCorpus& val_corpus,
                                            const GmmPrior& prior, const TrainSchedule& schedule,
                                            const MlpNetwork* decoder_init = nullptr) {
    validate_schedule(schedule);
    validate_prior(prior);
    if (corpus.rows.empty()) throw std::invalid_argument("train_conditional_gan: empty corpus");
    if (corpus.classes != prior.class_names)
        throw std::invalid_argument("train_conditional_gan: corpus classes do not match prior class names");
    if (!val_corpus.rows.empty() && val_corpus.feature_dim != corpus.feature_dim)
        throw std::invalid_argument("train_conditional_gan: validation feature dim mismatch");
    if (schedule.init == TrainSchedule::Init::from_decoder && decoder_init == nullptr)
        throw std::invalid_argument("train_conditional_gan: schedule requires decoder weights");

    const int d = corpus.feature_dim;
    const int k = prior.component_count();
    const int code_dim = prior.dim();

    Rng rng(mix_seed(schedule.seed, 0x63676e));
    Rng eval_rng(mix_seed(schedule.seed, 0x6576616c));

    GanModel model;
    model.conditional = true;
    model.latent_dim = code_dim;
    model.prior = prior;
    model.norm = fit_normalizer(corpus);

    std::vector<int> gen_dims = {code_dim + k, 128, 512, d};
    if (decoder_init) {
        gen_dims.assign(decoder_init->layer_dims.begin(), decoder_init->layer_dims.end());
        gen_dims.front() += k;
    }
    const std::vector<int> disc_dims = {d + k, 512, 128, 1};
    model.generator = make_mlp(gen_dims, HiddenAct::relu, OutputAct::linear, rng);
    model.discriminator = make_mlp(disc_dims, HiddenAct::relu, OutputAct::sigmoid, rng);

    if (schedule.init == TrainSchedule::Init::from_decoder) {
        const MlpNetwork& dec = *decoder_init;
        if (dec.layer_dims.front() != code_dim || dec.output_dim() != d)
            throw std::invalid_argument("train_conditional_gan: decoder weights are not dimension-compatible");
        // First layer: decoder columns for the latent inputs, zeros for the
        // appended one-hot columns. Remaining layers copy through.
        for (int l = 0; l < dec.layer_count(); ++l) {
            if (l == 0) {
                Matrix w0(model.generator.weights[0].rows, model.generator.weights[0].cols, 0.0);
                for (int r = 0; r < dec.weights[0].rows; ++r)
                    for (int c = 0; c < dec.weights[0].cols; ++c) w0(r, c) = dec.weights[0](r, c);
                model.generator.weights[0] = std::move(w0);
            } else {
                model.generator.weights[l] = dec.weights[l];
            }
            model.generator.biases[l] = dec.biases[l];
        }
    }

    OptimizerState gen_opt = make_optimizer(model.generator, {schedule.gen_lr});
    OptimizerState disc_opt = make_optimizer(model.discriminator, {schedule.disc_lr});

    std::map<std::string, int> class_index;
    for (int c = 0; c < k; ++c) class_index[prior.class_names[c]] = c;

    const Matrix train_x = apply_normalizer(model.norm, corpus_features(corpus));
    std::vector<int> train_cls(corpus.rows.size());
    for (std::size_t i = 0; i < corpus.rows.size(); ++i) train_cls[i] = class_index.at(corpus.rows[i].label);

    Matrix val_x;
    std::vector<int> val_cls;
    if (!val_corpus.rows.empty()) {
        val_x = apply_normalizer(model.norm, corpus_features(val_corpus));
        for (const CorpusRow& r : val_corpus.rows) {
            auto it = class_index.find(r.label);
            if (it == class_index.end())
                throw std::invalid_argument("train_conditional_gan: validation label '" + r.label +
                                            "' not in prior classes");
            val_cls.push_back(it->second);
        }
    }

    auto latent_for = [&](Rng& r, const std::vector<int>& cls) {
        Matrix z(static_cast<int>(cls.size()), code_dim);
        for (std::size_t i = 0; i < cls.size(); ++i) {
            const GmmComponent& comp = prior.components[cls[i]];
            for (int j = 0; j < code_dim; ++j)
                z(static_cast<int>(i), j) = comp.mean[j] + std::sqrt(comp.covariance[j]) * r.normal();
        }
        return hconcat(z, one_hot(cls, k));
    };

    const int n = train_x.rows;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    LossHistory history;
    for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += schedule.batch_size) {
            const int len = std::min(schedule.batch_size, n - start);
            try {
                std::vector<int> idx(order.begin() + start, order.begin() + start + len);
                std::vector<int> cls(len);
                for (int i = 0; i < len; ++i) cls[i] = train_cls[idx[i]];
                const Matrix onehot = one_hot(cls, k);
                const Matrix real_in = hconcat(take_rows(train_x, idx), onehot);

                // discriminator step
                {
                    const Matrix fake_x = forward(model.generator, latent_for(rng, cls)).outputs();
                    const Matrix disc_in = vconcat(real_in, hconcat(fake_x, onehot));
                    Matrix targets(2 * len, 1);
                    for (int i = 0; i < len; ++i) targets(i, 0) = 1.0;
                    ActivationTrace trace = forward(model.discriminator, disc_in);
                    LossValue loss = bce_loss(trace.outputs(), targets);
                    optimizer_step(model.discriminator, backward(model.discriminator, trace, loss.grad), disc_opt);
                    model.disc_updates += 1;
                }
                // generator steps
                for (int s = 0; s < schedule.gen_steps_per_disc_step; ++s) {
                    ActivationTrace gen_trace = forward(model.generator, latent_for(rng, cls));
                    ActivationTrace disc_trace =
                        forward(model.discriminator, hconcat(gen_trace.outputs(), onehot));
                    LossValue loss = generator_loss(disc_trace.outputs());
                    Gradients disc_grads = backward(model.discriminator, disc_trace, loss.grad);
                    Matrix out_grad(len, d);
                    for (int i = 0; i < len; ++i)
                        for (int j = 0; j < d; ++j) out_grad(i, j) = disc_grads.input(i, j);
                    optimizer_step(model.generator, backward(model.generator, gen_trace, out_grad), gen_opt);
                    model.gen_updates += 1;
                }
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("gan training aborted at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(start / schedule.batch_size) + ": " + e.what());
            }
        }

        detail::EpochLosses train_l = detail::eval_gan_losses(
            model, hconcat(train_x, one_hot(train_cls, k)), latent_for(eval_rng, train_cls), one_hot(train_cls, k));
        history.add(epoch, Split::train, train_l.disc, train_l.gen);
        if (val_x.rows > 0) {
            detail::EpochLosses val_l = detail::eval_gan_losses(
                model, hconcat(val_x, one_hot(val_cls, k)), latent_for(eval_rng, val_cls), one_hot(val_cls, k));
            history.add(epoch, Split::validation, val_l.disc, val_l.gen);
        }
    }
    return {std::move(model), std::move(history)};
}

// ----- sampling from a trained model

struct GenerateResult {
    Matrix samples;                   // n x data_dim, feature scale for conditional models
    std::vector<std::string> labels;  // conditional only
};

inline GenerateResult generate(const GanModel& model, int n, std::uint64_t seed,
                               std::optional<std::string> class_name = std::nullopt) {
    if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
    if (class_name && !model.conditional)
        throw std::invalid_argument("generate: class requested on an unconditional model");
    GenerateResult out;
    out.samples = Matrix(n, model.data_dim());
    if (n == 0) return out;

    Rng rng(mix_seed(seed, 0x67656e));
    if (!model.conditional) {
        Matrix z(n, model.latent_dim);
        for (double& v : z.data) v = rng.normal();
        out.samples = invert_normalizer(model.norm, forward(model.generator, z).outputs());
        return out;
    }

    const int k = model.prior.component_count();
    int forced = -1;
    if (class_name) {
        for (int c = 0; c < k; ++c)
            if (model.prior.class_names[c] == *class_name) forced = c;
        if (forced < 0) throw std::invalid_argument("generate: unknown class '" + *class_name + "'");
    }
    std::vector<int> cls(n);
    for (int i = 0; i < n; ++i) {
        if (forced >= 0) {
            cls[i] = forced;
        } else {
            const double u = rng.uniform();
            double acc = 0.0;
            cls[i] = k - 1;
            for (int c = 0; c < k; ++c) {
                acc += model.prior.components[c].weight;
                if (u < acc) {
                    cls[i] = c;
                    break;
                }
            }
        }
    }
    Matrix z(n, model.latent_dim);
    for (int i = 0; i < n; ++i) {
        const GmmComponent& comp = model.prior.components[cls[i]];
        for (int j = 0; j < model.latent_dim; ++j) z(i, j) = comp.mean[j] + std::sqrt(comp.covariance[j]) * rng.normal();
    }
    const Matrix raw = forward(model.generator, hconcat(z, one_hot(cls, k))).outputs();
    out.samples = invert_normalizer(model.norm, raw);
    for (int i = 0; i < n; ++i) out.labels.push_back(model.prior.class_names[cls[i]]);
    return out;
}

// ----- checkpoints

inline void save_gan(const std::string& path, const GanModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_gan: cannot open " + path);
    write_checkpoint_header(os);
    io::write_u8(os, kKindGan);
    io::write_u8(os, model.conditional ? 1 : 0);
    write_network_block(os, model.generator);
    write_network_block(os, model.discriminator);
    if (model.conditional) {
        io::write_string(os, prior_to_string(model.prior));
    } else {
        io::write_u32(os, static_cast<std::uint32_t>(model.latent_dim));
    }
    io::write_f64_vector(os, model.norm.mean);
    io::write_f64_vector(os, model.norm.stddev);
    if (!os) throw std::runtime_error("save_gan: write failed for " + path);
}

inline GanModel load_gan(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_gan: cannot open " + path);
    read_checkpoint_header(is);
    if (io::read_u8(is) != kKindGan) throw std::runtime_error("load_gan: not a GAN checkpoint: " + path);
    GanModel model;
    model.conditional = io::read_u8(is) != 0;
    model.generator = read_network_block(is);
    model.discriminator = read_network_block(is);
    if (model.conditional) {
        model.prior = prior_from_string(io::read_string(is));
        model.latent_dim = model.prior.dim();
    } else {
        model.latent_dim = static_cast<int>(io::read_u32(is));
    }
    model.norm.mean = io::read_f64_vector(is);
    model.norm.stddev = io::read_f64_vector(is);
    return model;
}

}  // namespace ganser
