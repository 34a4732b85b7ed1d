// Metric computation and the three scenario harnesses: cross-validated
// training augmentation, synthetic-test evaluation, and cross-corpus
// evaluation. Every fold trains its models on the training sessions only; the
// ids of all rows that reach a fitting routine are recorded so tests can
// audit for test-session leakage.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/aae.hpp"
#include "ganser/corpus.hpp"
#include "ganser/gan.hpp"
#include "ganser/gmm.hpp"
#include "ganser/svm.hpp"

namespace ganser {

// ----- confusion matrix and unweighted average recall

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<long>> counts;  // rows = true, cols = predicted

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> cls)
        : classes(std::move(cls)), counts(classes.size(), std::vector<long>(classes.size(), 0)) {}

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("ConfusionMatrix: unknown class '" + name + "'");
    }

    void add(const std::string& truth, const std::string& predicted) {
        counts[index_of(truth)][index_of(predicted)] += 1;
    }

    long row_sum(int i) const {
        long s = 0;
        for (long v : counts[i]) s += v;
        return s;
    }
};

// Mean of per-class recalls, in percent.
inline double uar(const ConfusionMatrix& cm) {
    if (cm.classes.empty()) throw std::invalid_argument("uar: empty confusion matrix");
    double total = 0.0;
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        const long rs = cm.row_sum(static_cast<int>(i));
        if (rs == 0)
            throw std::invalid_argument("uar: class '" + cm.classes[i] + "' has no test samples; recall undefined");
        total += static_cast<double>(cm.counts[i][i]) / static_cast<double>(rs);
    }
    return 100.0 * total / static_cast<double>(cm.classes.size());
}

inline double chance_accuracy(int class_count) {
    if (class_count < 1) throw std::invalid_argument("chance_accuracy: class_count must be >= 1");
    return 100.0 / class_count;
}

// ----- scenarios

enum class Scenario {
    synthetic_2d_only,
    real_2d_only,
    real_2d_plus_synthetic,
    synthetic_cond_only,
    real_only,
    real_plus_cond_baseline,
    real_plus_cond_improved,
};

inline const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::synthetic_2d_only: return "synthetic-2d-only";
        case Scenario::real_2d_only: return "real-2d-only";
        case Scenario::real_2d_plus_synthetic: return "real-2d+synthetic";
        case Scenario::synthetic_cond_only: return "synthetic-cond-only";
        case Scenario::real_only: return "real-only";
        case Scenario::real_plus_cond_baseline: return "real+cond-baseline";
        case Scenario::real_plus_cond_improved: return "real+cond-improved";
    }
    throw std::invalid_argument("scenario_name: unknown scenario");
}

inline Scenario scenario_from_name(const std::string& name) {
    for (Scenario s : {Scenario::synthetic_2d_only, Scenario::real_2d_only, Scenario::real_2d_plus_synthetic,
                       Scenario::synthetic_cond_only, Scenario::real_only, Scenario::real_plus_cond_baseline,
                       Scenario::real_plus_cond_improved})
        if (name == scenario_name(s)) return s;
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

// The trainable rows of the in-domain and cross-corpus result tables.
inline std::vector<Scenario> table_scenarios() {
    return {Scenario::synthetic_2d_only,  Scenario::real_2d_only,          Scenario::real_2d_plus_synthetic,
            Scenario::synthetic_cond_only, Scenario::real_only,             Scenario::real_plus_cond_baseline,
            Scenario::real_plus_cond_improved};
}

enum class GeneratorKind { vanilla_2d, cond_improved };

inline const char* generator_kind_name(GeneratorKind k) {
    return k == GeneratorKind::vanilla_2d ? "vanilla-2d" : "cond-improved";
}

// ----- configuration

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    int n_synth = -1;       // -1 = match the real training-set size, balanced across classes
    int n_synth_test = -1;  // -1 = match the held-out set size
    double prior_radius = 4.0;
    double prior_sigma = 0.5;
    AaeConfig aae;
    TrainSchedule vanilla;
    TrainSchedule cond_baseline;
    TrainSchedule cond_improved;
    SvmConfig svm;

    // Desk-scale defaults keep a full table run in minutes while leaving the
    // per-module defaults untouched for standalone training.
    ExperimentConfig() {
        aae.epochs = 60;
        vanilla.epochs = 300;
        cond_baseline.epochs = 60;
        cond_improved = improved_schedule();
        cond_improved.epochs = 60;
    }
};

inline std::string experiment_config_echo(const ExperimentConfig& cfg, const std::string& run_name) {
    std::ostringstream os;
    os << "run = " << run_name << "\n";
    os << "master_seed = " << cfg.master_seed << "\n";
    os << "n_synth = " << cfg.n_synth << "\n";
    os << "n_synth_test = " << cfg.n_synth_test << "\n";
    os << "prior_radius = " << cfg.prior_radius << "\n";
    os << "prior_sigma = " << cfg.prior_sigma << "\n";
    os << "aae_epochs = " << cfg.aae.epochs << "\n";
    os << "aae_batch_size = " << cfg.aae.batch_size << "\n";
    os << "aae_lr = " << cfg.aae.learning_rate << "\n";
    auto schedule = [&](const char* name, const TrainSchedule& s) {
        os << name << "_epochs = " << s.epochs << "\n";
        os << name << "_batch_size = " << s.batch_size << "\n";
        os << name << "_gen_lr = " << s.gen_lr << "\n";
        os << name << "_disc_lr = " << s.disc_lr << "\n";
        os << name << "_gen_steps = " << s.gen_steps_per_disc_step << "\n";
    };
    schedule("vanilla", cfg.vanilla);
    schedule("cond_baseline", cfg.cond_baseline);
    schedule("cond_improved", cfg.cond_improved);
    os << "svm_C = " << cfg.svm.C << "\n";
    os << "svm_gamma = " << cfg.svm.gamma << "\n";
    os << "svm_tol = " << cfg.svm.tol << "\n";
    return os.str();
}

// ----- reports

struct FoldResult {
    int held_out_session = 0;  // -1 for cross-corpus evaluation
    ConfusionMatrix cm;
    double uar_percent = 0.0;
    std::set<std::string> fit_row_ids;   // every real row id seen by a fitting routine
    std::set<std::string> test_row_ids;
};

struct ExperimentReport {
    std::string scenario;
    std::vector<FoldResult> folds;
    double mean_uar = 0.0;
    std::string config_echo;
};

inline double mean_fold_uar(const std::vector<FoldResult>& folds) {
    if (folds.empty()) throw std::invalid_argument("mean_fold_uar: no folds");
    double s = 0.0;
    for (const FoldResult& f : folds) s += f.uar_percent;
    return s / static_cast<double>(folds.size());
}

namespace detail {

inline void record_ids(std::set<std::string>& sink, const FeatureCorpus& corpus) {
    for (const CorpusRow& r : corpus.rows) sink.insert(r.id);
}

inline int balanced_count(int total, int class_count, int class_idx) {
    return total / class_count + (class_idx < total % class_count ? 1 : 0);
}

// Models trained once per fold and shared across the scenarios that need them.
struct FoldModels {
    std::optional<AaeTrainResult> aae;
    std::optional<GanTrainResult> vanilla;
    std::optional<GanTrainResult> cond_baseline;
    std::optional<GanTrainResult> cond_improved;
    Matrix train_codes;
};

inline bool needs_aae(Scenario s) {
    switch (s) {
        case Scenario::synthetic_2d_only:
        case Scenario::real_2d_only:
        case Scenario::real_2d_plus_synthetic:
        case Scenario::synthetic_cond_only:
        case Scenario::real_plus_cond_improved:
            return true;
        default:
            return false;
    }
}

inline bool needs_vanilla(Scenario s) {
    return s == Scenario::synthetic_2d_only || s == Scenario::real_2d_plus_synthetic;
}

inline bool needs_cond_baseline(Scenario s) { return s == Scenario::real_plus_cond_baseline; }

inline bool needs_cond_improved(Scenario s) {
    return s == Scenario::synthetic_cond_only || s == Scenario::real_plus_cond_improved;
}

inline bool is_2d_scenario(Scenario s) {
    return s == Scenario::synthetic_2d_only || s == Scenario::real_2d_only || s == Scenario::real_2d_plus_synthetic;
}

inline FoldModels train_fold_models(const FeatureCorpus& train, const GmmPrior& prior,
                                    const std::vector<Scenario>& scenarios, const ExperimentConfig& cfg,
                                    std::uint64_t fold_seed, const FeatureCorpus* gan_val,
                                    std::set<std::string>& fit_ids,
                                    std::map<std::string, LossHistory>* histories) {
    bool want_aae = false, want_vanilla = false, want_base = false, want_improved = false;
    for (Scenario s : scenarios) {
        want_aae |= needs_aae(s);
        want_vanilla |= needs_vanilla(s);
        want_base |= needs_cond_baseline(s);
        want_improved |= needs_cond_improved(s);
    }

    FoldModels models;
    const FeatureCorpus empty_corpus{train.feature_dim, {}, {}};

    if (want_aae) {
        AaeConfig aae_cfg = cfg.aae;
        aae_cfg.seed = mix_seed(fold_seed, 1);
        record_ids(fit_ids, train);
        models.aae = train_aae(train, prior, aae_cfg);
        models.train_codes = encode(models.aae->model, corpus_features(train));
    }
    if (want_vanilla) {
        TrainSchedule sched = cfg.vanilla;
        sched.seed = mix_seed(fold_seed, 2);
        record_ids(fit_ids, train);
        Matrix val_codes(0, 2);
        if (gan_val && !gan_val->rows.empty()) val_codes = encode(models.aae->model, corpus_features(*gan_val));
        models.vanilla = train_vanilla_gan(models.train_codes, val_codes, sched);
        if (histories) (*histories)["vanilla"] = models.vanilla->history;
    }
    if (want_base) {
        TrainSchedule sched = cfg.cond_baseline;
        sched.seed = mix_seed(fold_seed, 3);
        record_ids(fit_ids, train);
        models.cond_baseline = train_conditional_gan(train, gan_val ? *gan_val : empty_corpus, prior, sched);
        if (histories) (*histories)["cond-baseline"] = models.cond_baseline->history;
    }
    if (want_improved) {
        TrainSchedule sched = cfg.cond_improved;
        sched.seed = mix_seed(fold_seed, 4);
        record_ids(fit_ids, train);
        const MlpNetwork decoder = decoder_weights(models.aae->model);
        models.cond_improved =
            train_conditional_gan(train, gan_val ? *gan_val : empty_corpus, prior, sched, &decoder);
        if (histories) (*histories)["cond-improved"] = models.cond_improved->history;
    }
    return models;
}

struct TrainingSet {
    Matrix X;
    std::vector<std::string> y;
};

inline void append_rows(TrainingSet& set, const Matrix& x, const std::vector<std::string>& labels) {
    set.X = set.X.rows == 0 ? x : vconcat(set.X, x);
    set.y.insert(set.y.end(), labels.begin(), labels.end());
}

// Assemble the scenario's SVM training set from real rows and generated
// samples. Synthetic rows never carry corpus ids, so the leakage audit only
// tracks the real side.
inline TrainingSet assemble_training_set(Scenario scenario, const FeatureCorpus& train, const GmmPrior& prior,
                                         const FoldModels& models, const ExperimentConfig& cfg,
                                         std::uint64_t fold_seed, std::set<std::string>& fit_ids) {
    if (cfg.n_synth == 0 || cfg.n_synth < -1)
        throw std::invalid_argument("experiments: n_synth must be positive (or -1 for the default)");
    const int n_synth = cfg.n_synth == -1 ? static_cast<int>(train.rows.size()) : cfg.n_synth;
    const int k = static_cast<int>(train.classes.size());
    TrainingSet set;

    switch (scenario) {
        case Scenario::real_2d_only:
        case Scenario::real_2d_plus_synthetic:
            record_ids(fit_ids, train);
            append_rows(set, models.train_codes, corpus_labels(train));
            break;
        case Scenario::real_only:
        case Scenario::real_plus_cond_baseline:
        case Scenario::real_plus_cond_improved:
            record_ids(fit_ids, train);
            append_rows(set, corpus_features(train), corpus_labels(train));
            break;
        default:
            break;
    }

    if (scenario == Scenario::synthetic_2d_only || scenario == Scenario::real_2d_plus_synthetic) {
        GenerateResult g = generate(models.vanilla->model, n_synth, mix_seed(fold_seed, 10));
        append_rows(set, g.samples, assign_class(prior, g.samples));
    }
    if (scenario == Scenario::synthetic_cond_only || scenario == Scenario::real_plus_cond_baseline ||
        scenario == Scenario::real_plus_cond_improved) {
        const GanModel& gan = scenario == Scenario::real_plus_cond_baseline ? models.cond_baseline->model
                                                                            : models.cond_improved->model;
        for (int c = 0; c < k; ++c) {
            const int count = balanced_count(n_synth, k, c);
            if (count == 0) continue;
            GenerateResult g = generate(gan, count, mix_seed(fold_seed, 20 + c), train.classes[c]);
            append_rows(set, g.samples, g.labels);
        }
    }
    return set;
}

inline FoldResult evaluate_fold(Scenario scenario, const FeatureCorpus& train, const FeatureCorpus& test,
                                const GmmPrior& prior, const FoldModels& models, const ExperimentConfig& cfg,
                                std::uint64_t fold_seed, int held_out_session,
                                std::set<std::string> fit_ids_so_far) {
    FoldResult fold;
    fold.held_out_session = held_out_session;
    fold.fit_row_ids = std::move(fit_ids_so_far);
    for (const CorpusRow& r : test.rows) fold.test_row_ids.insert(r.id);

    TrainingSet set = assemble_training_set(scenario, train, prior, models, cfg, fold_seed, fold.fit_row_ids);
    record_ids(fold.fit_row_ids, train);  // SVM normalizer and kernel see the real rows in `set`
    const SvmModel svm = train_svm(set.X, set.y, cfg.svm);

    const Matrix test_x =
        is_2d_scenario(scenario) ? encode(models.aae->model, corpus_features(test)) : corpus_features(test);
    const std::vector<std::string> preds = predict(svm, test_x);

    fold.cm = ConfusionMatrix(train.classes);
    for (std::size_t i = 0; i < preds.size(); ++i) fold.cm.add(test.rows[i].label, preds[i]);
    fold.uar_percent = uar(fold.cm);
    return fold;
}

}  // namespace detail

// ----- Table-1 analog: synthetic samples in the training set, leave-one-session-out CV

inline std::vector<ExperimentReport> run_training_augmentation_cv(const FeatureCorpus& corpus,
                                                                  const std::vector<Scenario>& scenarios,
                                                                  const ExperimentConfig& cfg) {
    validate_corpus(corpus);
    const std::set<int> sessions = corpus.sessions();
    if (sessions.size() < 2)
        throw std::invalid_argument("run_training_augmentation_cv: corpus needs at least 2 sessions");
    if (scenarios.empty()) throw std::invalid_argument("run_training_augmentation_cv: no scenarios");

    const GmmPrior prior = make_circle_prior(corpus.classes, cfg.prior_radius, cfg.prior_sigma);
    std::vector<ExperimentReport> reports(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        reports[i].scenario = scenario_name(scenarios[i]);
        reports[i].config_echo = experiment_config_echo(cfg, reports[i].scenario);
    }

    int fold_index = 0;
    for (int session : sessions) {
        auto [train, test] = split_by_session(corpus, session);
        if (train.classes != corpus.classes || test.classes != corpus.classes)
            throw std::invalid_argument("run_training_augmentation_cv: every class must appear in every session");
        const std::uint64_t fold_seed = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(fold_index));

        std::set<std::string> fit_ids;
        detail::FoldModels models =
            detail::train_fold_models(train, prior, scenarios, cfg, fold_seed, nullptr, fit_ids, nullptr);
        for (std::size_t i = 0; i < scenarios.size(); ++i)
            reports[i].folds.push_back(detail::evaluate_fold(scenarios[i], train, test, prior, models, cfg,
                                                             fold_seed, session, fit_ids));
        ++fold_index;
    }
    for (ExperimentReport& r : reports) r.mean_uar = mean_fold_uar(r.folds);
    return reports;
}

inline ExperimentReport run_training_augmentation_cv(const FeatureCorpus& corpus, Scenario scenario,
                                                     const ExperimentConfig& cfg) {
    return run_training_augmentation_cv(corpus, std::vector<Scenario>{scenario}, cfg).front();
}

// ----- Table-2 analog: synthetic samples in the test set

inline ExperimentReport run_synthetic_test_eval(const FeatureCorpus& corpus, GeneratorKind kind,
                                                const ExperimentConfig& cfg) {
    validate_corpus(corpus);
    const std::set<int> sessions = corpus.sessions();
    if (sessions.size() < 2) throw std::invalid_argument("run_synthetic_test_eval: corpus needs at least 2 sessions");
    if (cfg.n_synth_test == 0 || cfg.n_synth_test < -1)
        throw std::invalid_argument("run_synthetic_test_eval: n_synth_test must be positive (or -1 for the default)");

    const GmmPrior prior = make_circle_prior(corpus.classes, cfg.prior_radius, cfg.prior_sigma);
    const std::vector<Scenario> needed = {kind == GeneratorKind::vanilla_2d ? Scenario::synthetic_2d_only
                                                                            : Scenario::synthetic_cond_only};
    ExperimentReport report;
    report.scenario = std::string("synthetic-test-") + generator_kind_name(kind);
    report.config_echo = experiment_config_echo(cfg, report.scenario);

    int fold_index = 0;
    for (int session : sessions) {
        auto [train, test] = split_by_session(corpus, session);
        if (train.classes != corpus.classes)
            throw std::invalid_argument("run_synthetic_test_eval: every class must appear in every session");
        const std::uint64_t fold_seed = mix_seed(cfg.master_seed, 0x1000 + static_cast<std::uint64_t>(fold_index));
        const int n_test = cfg.n_synth_test == -1 ? static_cast<int>(test.rows.size()) : cfg.n_synth_test;

        FoldResult fold;
        fold.held_out_session = session;
        detail::FoldModels models =
            detail::train_fold_models(train, prior, needed, cfg, fold_seed, nullptr, fold.fit_row_ids, nullptr);

        // SVM trained on real rows; synthetic rows form the test set and carry
        // the label implied by their generation mechanism.
        Matrix synth_x;
        std::vector<std::string> synth_y;
        const int k = static_cast<int>(train.classes.size());
        if (kind == GeneratorKind::vanilla_2d) {
            GenerateResult g = generate(models.vanilla->model, n_test, mix_seed(fold_seed, 30));
            synth_x = g.samples;
            synth_y = assign_class(prior, g.samples);
        } else {
            for (int c = 0; c < k; ++c) {
                const int count = detail::balanced_count(n_test, k, c);
                if (count == 0) continue;
                GenerateResult g = generate(models.cond_improved->model, count, mix_seed(fold_seed, 30 + c),
                                            train.classes[c]);
                synth_x = synth_x.rows == 0 ? g.samples : vconcat(synth_x, g.samples);
                synth_y.insert(synth_y.end(), g.labels.begin(), g.labels.end());
            }
        }
        for (const std::string& cls : train.classes)
            if (std::count(synth_y.begin(), synth_y.end(), cls) == 0)
                throw std::runtime_error("run_synthetic_test_eval: generator produced no samples for class " + cls);

        detail::record_ids(fold.fit_row_ids, train);
        const Matrix train_x =
            kind == GeneratorKind::vanilla_2d ? models.train_codes : corpus_features(train);
        const SvmModel svm = train_svm(train_x, corpus_labels(train), cfg.svm);
        const std::vector<std::string> preds = predict(svm, synth_x);

        fold.cm = ConfusionMatrix(train.classes);
        for (std::size_t i = 0; i < preds.size(); ++i) fold.cm.add(synth_y[i], preds[i]);
        fold.uar_percent = uar(fold.cm);
        report.folds.push_back(std::move(fold));
        ++fold_index;
    }
    report.mean_uar = mean_fold_uar(report.folds);
    return report;
}

// ----- Table-3 analog: cross-corpus evaluation

struct CrossCorpusResult {
    std::vector<ExperimentReport> reports;
    std::map<std::string, LossHistory> gan_histories;  // validation tracked against the test corpus
};

inline CrossCorpusResult run_cross_corpus(const FeatureCorpus& train_corpus, const FeatureCorpus& test_corpus,
                                          const std::vector<Scenario>& scenarios, const ExperimentConfig& cfg) {
    validate_corpus(train_corpus);
    validate_corpus(test_corpus);
    if (train_corpus.classes != test_corpus.classes)
        throw std::invalid_argument("run_cross_corpus: corpora must share the same class list");
    if (train_corpus.feature_dim != test_corpus.feature_dim)
        throw std::invalid_argument("run_cross_corpus: corpora must share feature_dim");
    if (scenarios.empty()) throw std::invalid_argument("run_cross_corpus: no scenarios");

    const GmmPrior prior = make_circle_prior(train_corpus.classes, cfg.prior_radius, cfg.prior_sigma);
    const std::uint64_t fold_seed = mix_seed(cfg.master_seed, 0xCC);

    CrossCorpusResult result;
    std::set<std::string> fit_ids;
    detail::FoldModels models = detail::train_fold_models(train_corpus, prior, scenarios, cfg, fold_seed,
                                                          &test_corpus, fit_ids, &result.gan_histories);
    for (Scenario s : scenarios) {
        ExperimentReport report;
        report.scenario = scenario_name(s);
        report.config_echo = experiment_config_echo(cfg, report.scenario);
        report.folds.push_back(detail::evaluate_fold(s, train_corpus, test_corpus, prior, models, cfg, fold_seed,
                                                     -1, fit_ids));
        report.mean_uar = mean_fold_uar(report.folds);
        result.reports.push_back(std::move(report));
    }
    return result;
}

// ----- report emission

inline void write_report_csv(std::ostream& os, const std::vector<ExperimentReport>& reports) {
    os << "scenario,fold,uar\n";
    char buf[40];
    for (const ExperimentReport& r : reports) {
        for (const FoldResult& f : r.folds) {
            std::snprintf(buf, sizeof buf, "%.17g", f.uar_percent);
            os << r.scenario << "," << f.held_out_session << "," << buf << "\n";
        }
        std::snprintf(buf, sizeof buf, "%.17g", r.mean_uar);
        os << r.scenario << ",mean," << buf << "\n";
    }
}

inline void write_report_summary(std::ostream& os, const std::vector<ExperimentReport>& reports) {
    char buf[40];
    for (const ExperimentReport& r : reports) {
        std::snprintf(buf, sizeof buf, "%.2f", r.mean_uar);
        os << r.scenario << ": mean UAR " << buf << " over " << r.folds.size() << " fold(s) [";
        for (std::size_t i = 0; i < r.folds.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.2f", r.folds[i].uar_percent);
            os << (i ? " " : "") << buf;
        }
        os << "]\n";
    }
}

inline void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm) {
    os << "true\\pred";
    for (const std::string& c : cm.classes) os << "," << c;
    os << "\n";
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        os << cm.classes[i];
        for (long v : cm.counts[i]) os << "," << v;
        os << "\n";
    }
}

}  // namespace ganser
