// Command-line frontend: synth-corpus, train, generate, experiment, gradcheck.
// Configuration is flat key-value text, merged from an optional --config file
// with flag overrides; unknown keys are rejected and every run echoes its
// fully-resolved configuration next to its outputs.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/aae.hpp"
#include "ganser/corpus.hpp"
#include "ganser/experiments.hpp"
#include "ganser/gan.hpp"
#include "ganser/gmm.hpp"
#include "ganser/gradcheck.hpp"

namespace ganser {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

using KeyValues = std::map<std::string, std::string>;

inline KeyValues load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file " + path);
    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r");
            const std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw UsageError(path + ":" + std::to_string(line_no) + ": empty key or value");
        kv[key] = value;
    }
    return kv;
}

// Flags override config-file values.
inline KeyValues parse_options(const std::vector<std::string>& args, std::size_t start) {
    KeyValues flags;
    for (std::size_t i = start; i < args.size(); ++i) {
        std::string arg = args[i];
        if (arg.rfind("--", 0) != 0) throw UsageError("expected --key, got '" + arg + "'");
        arg = arg.substr(2);
        std::string key, value;
        const std::size_t eq = arg.find('=');
        if (eq != std::string::npos) {
            key = arg.substr(0, eq);
            value = arg.substr(eq + 1);
        } else {
            key = arg;
            if (i + 1 >= args.size()) throw UsageError("missing value for --" + key);
            value = args[++i];
        }
        if (key.empty() || value.empty()) throw UsageError("empty key or value in flags");
        flags[key] = value;
    }
    KeyValues kv;
    const auto cfg_it = flags.find("config");
    if (cfg_it != flags.end()) kv = load_config_file(cfg_it->second);
    for (const auto& [k, v] : flags)
        if (k != "config") kv[k] = v;
    return kv;
}

inline void reject_unknown(const KeyValues& kv, const std::set<std::string>& allowed, const std::string& command) {
    for (const auto& [k, v] : kv)
        if (allowed.find(k) == allowed.end())
            throw UsageError("unknown key '" + k + "' for command " + command);
}

inline std::string require(const KeyValues& kv, const std::string& key, const std::string& command) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw UsageError(command + " requires --" + key);
    return it->second;
}

inline std::string get_or(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

inline long get_long(const KeyValues& kv, const std::string& key, long fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw UsageError("bad integer for --" + key + ": '" + it->second + "'");
    }
}

inline std::uint64_t get_seed(const KeyValues& kv, const std::string& key, std::uint64_t fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw UsageError("bad seed for --" + key + ": '" + it->second + "'");
    }
}

inline double get_double(const KeyValues& kv, const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw UsageError("bad number for --" + key + ": '" + it->second + "'");
    return v;
}

inline void write_config_echo(const std::string& path, const std::string& command, const KeyValues& kv) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config echo to " + path);
    os << "command = " << command << "\n";
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// ----- commands

inline int cmd_synth_corpus(const KeyValues& kv, std::ostream& out) {
    reject_unknown(kv, {"spec", "seed", "out"}, "synth-corpus");
    const std::string out_path = require(kv, "out", "synth-corpus");
    SynthCorpusSpec spec;
    if (kv.count("spec")) {
        if (!std::filesystem::exists(kv.at("spec"))) throw UsageError("spec file not found: " + kv.at("spec"));
        spec = load_spec(kv.at("spec"));
    }
    const std::uint64_t seed = get_seed(kv, "seed", 1);
    const FeatureCorpus corpus = generate_synth_corpus(spec, seed);
    save_corpus(corpus, out_path);

    std::ofstream manifest(out_path + ".manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest for " + out_path);
    manifest << "command = synth-corpus\n";
    manifest << "spec = " << get_or(kv, "spec", "(default)") << "\n";
    manifest << "seed = " << seed << "\n";
    manifest << "rows = " << corpus.rows.size() << "\n";
    manifest << "feature_dim = " << corpus.feature_dim << "\n";
    for (const auto& [cls, count] : corpus.class_histogram()) manifest << "class " << cls << " = " << count << "\n";
    std::map<int, int> session_counts;
    for (const CorpusRow& r : corpus.rows) session_counts[r.session] += 1;
    for (const auto& [s, count] : session_counts) manifest << "session " << s << " = " << count << "\n";

    out << "wrote " << corpus.rows.size() << " rows to " << out_path << "\n";
    return 0;
}

inline TrainSchedule schedule_from_kv(const KeyValues& kv, TrainSchedule base, std::uint64_t seed) {
    base.epochs = static_cast<int>(get_long(kv, "epochs", base.epochs));
    base.batch_size = static_cast<int>(get_long(kv, "batch-size", base.batch_size));
    base.gen_lr = get_double(kv, "gen-lr", base.gen_lr);
    base.disc_lr = get_double(kv, "disc-lr", base.disc_lr);
    base.gen_steps_per_disc_step = static_cast<int>(get_long(kv, "gen-steps", base.gen_steps_per_disc_step));
    base.seed = seed;
    return base;
}

inline int cmd_train(const std::string& kind, const KeyValues& kv, std::ostream& out) {
    reject_unknown(kv,
                   {"corpus", "out", "seed", "epochs", "batch-size", "lr", "gen-lr", "disc-lr", "gen-steps",
                    "aae-checkpoint", "val-session", "prior-radius", "prior-sigma"},
                   "train " + kind);
    const std::string corpus_path = require(kv, "corpus", "train");
    const std::string out_dir = require(kv, "out", "train");
    if (!std::filesystem::exists(corpus_path)) throw UsageError("corpus file not found: " + corpus_path);
    const FeatureCorpus corpus = load_corpus(corpus_path);
    const std::uint64_t seed = get_seed(kv, "seed", 1);
    ensure_dir(out_dir);

    const double prior_radius = get_double(kv, "prior-radius", 4.0);
    const double prior_sigma = get_double(kv, "prior-sigma", 0.5);

    const std::set<int> sessions = corpus.sessions();
    const int val_session = static_cast<int>(get_long(kv, "val-session", *sessions.rbegin()));

    if (kind == "aae") {
        AaeConfig cfg;
        cfg.epochs = static_cast<int>(get_long(kv, "epochs", cfg.epochs));
        cfg.batch_size = static_cast<int>(get_long(kv, "batch-size", cfg.batch_size));
        cfg.learning_rate = get_double(kv, "lr", cfg.learning_rate);
        cfg.seed = seed;
        const GmmPrior prior = make_circle_prior(corpus.classes, prior_radius, prior_sigma);
        AaeTrainResult result = train_aae(corpus, prior, cfg);
        save_aae(join_path(out_dir, "aae.ckpt"), result.model);
        std::ofstream losses(join_path(out_dir, "aae_loss.csv"));
        losses << "epoch,recon_loss,disc_loss,gen_loss\n";
        char buf[40];
        for (const AaeLossRecord& r : result.history) {
            losses << r.epoch;
            for (double v : {r.recon_loss, r.adv_disc_loss, r.adv_gen_loss}) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                losses << "," << buf;
            }
            losses << "\n";
        }
        write_config_echo(join_path(out_dir, "config.txt"), "train aae", kv);
        out << "wrote " << join_path(out_dir, "aae.ckpt") << "\n";
        return 0;
    }

    if (kind != "gan-vanilla" && kind != "gan-cond-baseline" && kind != "gan-cond-improved")
        throw UsageError("unknown train kind '" + kind +
                         "' (expected aae, gan-vanilla, gan-cond-baseline, gan-cond-improved)");

    GanTrainResult result;
    if (kind == "gan-vanilla") {
        TrainSchedule schedule = schedule_from_kv(kv, TrainSchedule{}, seed);
        Matrix codes, val_codes;
        if (corpus.feature_dim == 2) {
            auto [train_part, val_part] = split_by_session(corpus, val_session);
            codes = corpus_features(train_part);
            val_codes = corpus_features(val_part);
        } else {
            if (!kv.count("aae-checkpoint"))
                throw UsageError(
                    "gan-vanilla trains on 2-D codes: provide --aae-checkpoint (run `ganser train aae` first) or a "
                    "2-D corpus");
            const AaeModel aae = load_aae(kv.at("aae-checkpoint"));
            auto [train_part, val_part] = split_by_session(corpus, val_session);
            codes = encode(aae, corpus_features(train_part));
            val_codes = encode(aae, corpus_features(val_part));
        }
        result = train_vanilla_gan(codes, val_codes, schedule);
    } else {
        auto [train_part, val_part] = split_by_session(corpus, val_session);
        const GmmPrior prior = make_circle_prior(corpus.classes, prior_radius, prior_sigma);
        if (kind == "gan-cond-baseline") {
            TrainSchedule schedule = schedule_from_kv(kv, TrainSchedule{}, seed);
            result = train_conditional_gan(train_part, val_part, prior, schedule);
        } else {
            if (!kv.count("aae-checkpoint"))
                throw UsageError("gan-cond-improved requires --aae-checkpoint (run `ganser train aae` first)");
            const AaeModel aae = load_aae(kv.at("aae-checkpoint"));
            const MlpNetwork decoder = decoder_weights(aae);
            TrainSchedule schedule = schedule_from_kv(kv, improved_schedule(), seed);
            result = train_conditional_gan(train_part, val_part, prior, schedule, &decoder);
        }
    }
    save_gan(join_path(out_dir, "gan.ckpt"), result.model);
    save_loss_history(join_path(out_dir, "loss_history.csv"), result.history);
    write_config_echo(join_path(out_dir, "config.txt"), "train " + kind, kv);
    out << "wrote " << join_path(out_dir, "gan.ckpt") << "\n";
    return 0;
}

inline int cmd_generate(const KeyValues& kv, std::ostream& out) {
    reject_unknown(kv, {"checkpoint", "n", "class", "seed", "out", "prior"}, "generate");
    const std::string ckpt = require(kv, "checkpoint", "generate");
    const std::string out_path = require(kv, "out", "generate");
    const int n = static_cast<int>(get_long(kv, "n", -1));
    if (n < 0) throw UsageError("generate requires --n >= 0");
    if (!std::filesystem::exists(ckpt)) throw UsageError("checkpoint not found: " + ckpt);
    const GanModel model = load_gan(ckpt);
    const std::uint64_t seed = get_seed(kv, "seed", 1);

    std::optional<std::string> cls;
    if (kv.count("class")) cls = kv.at("class");
    GenerateResult g = generate(model, n, seed, cls);

    std::vector<std::string> labels = g.labels;
    if (!model.conditional) {
        if (kv.count("prior")) {
            const GmmPrior prior = load_prior(kv.at("prior"));
            labels = assign_class(prior, g.samples);
        } else {
            labels.assign(n, "unlabeled");
        }
    }

    FeatureCorpus synth;
    synth.feature_dim = model.data_dim();
    std::set<std::string> class_set(labels.begin(), labels.end());
    synth.classes.assign(class_set.begin(), class_set.end());
    for (int i = 0; i < n; ++i)
        synth.rows.push_back({"synth-" + std::to_string(i), 1, labels[i],
                              {g.samples.row(i), g.samples.row(i) + g.samples.cols}});
    save_corpus(synth, out_path);
    out << "wrote " << n << " samples to " << out_path << "\n";
    return 0;
}

inline ExperimentConfig experiment_config_from_kv(const KeyValues& kv, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.master_seed = seed;
    cfg.n_synth = static_cast<int>(get_long(kv, "n-synth", cfg.n_synth));
    cfg.n_synth_test = static_cast<int>(get_long(kv, "n-synth-test", cfg.n_synth_test));
    cfg.prior_radius = get_double(kv, "prior-radius", cfg.prior_radius);
    cfg.prior_sigma = get_double(kv, "prior-sigma", cfg.prior_sigma);
    cfg.aae.epochs = static_cast<int>(get_long(kv, "aae-epochs", cfg.aae.epochs));
    cfg.vanilla.epochs = static_cast<int>(get_long(kv, "vanilla-epochs", cfg.vanilla.epochs));
    const long cond_epochs = get_long(kv, "cond-epochs", 0);
    if (cond_epochs > 0) {
        cfg.cond_baseline.epochs = static_cast<int>(cond_epochs);
        cfg.cond_improved.epochs = static_cast<int>(cond_epochs);
    }
    cfg.svm.C = get_double(kv, "svm-c", cfg.svm.C);
    cfg.svm.gamma = get_double(kv, "svm-gamma", cfg.svm.gamma);
    return cfg;
}

inline int cmd_experiment(const std::string& table, const KeyValues& kv, std::ostream& out) {
    reject_unknown(kv,
                   {"corpus", "corpus2", "out", "seed", "n-synth", "n-synth-test", "aae-epochs", "vanilla-epochs",
                    "cond-epochs", "prior-radius", "prior-sigma", "svm-c", "svm-gamma"},
                   "experiment " + table);
    const std::string corpus_path = require(kv, "corpus", "experiment");
    const std::string out_dir = require(kv, "out", "experiment");
    if (!std::filesystem::exists(corpus_path)) throw UsageError("corpus file not found: " + corpus_path);
    const FeatureCorpus corpus = load_corpus(corpus_path);
    const ExperimentConfig cfg = experiment_config_from_kv(kv, get_seed(kv, "seed", 1));
    ensure_dir(out_dir);

    std::vector<ExperimentReport> reports;
    std::map<std::string, LossHistory> histories;
    if (table == "table1") {
        reports = run_training_augmentation_cv(corpus, table_scenarios(), cfg);
    } else if (table == "table2") {
        reports.push_back(run_synthetic_test_eval(corpus, GeneratorKind::vanilla_2d, cfg));
        reports.push_back(run_synthetic_test_eval(corpus, GeneratorKind::cond_improved, cfg));
    } else if (table == "table3") {
        if (!kv.count("corpus2"))
            throw UsageError("experiment table3 requires --corpus2 (the held-out test corpus)");
        if (!std::filesystem::exists(kv.at("corpus2"))) throw UsageError("corpus file not found: " + kv.at("corpus2"));
        const FeatureCorpus test_corpus = load_corpus(kv.at("corpus2"));
        CrossCorpusResult result = run_cross_corpus(corpus, test_corpus, table_scenarios(), cfg);
        reports = std::move(result.reports);
        histories = std::move(result.gan_histories);
    } else {
        throw UsageError("unknown experiment table '" + table + "' (expected table1, table2, table3)");
    }

    {
        std::ofstream csv(join_path(out_dir, "report.csv"));
        write_report_csv(csv, reports);
        std::ofstream summary(join_path(out_dir, "summary.txt"));
        write_report_summary(summary, reports);
    }
    for (const ExperimentReport& r : reports) {
        for (const FoldResult& f : r.folds) {
            const std::string name =
                "confusion_" + r.scenario + "_fold" + std::to_string(std::max(f.held_out_session, 0)) + ".csv";
            std::ofstream cm(join_path(out_dir, name));
            write_confusion_csv(cm, f.cm);
        }
    }
    for (const auto& [name, history] : histories)
        save_loss_history(join_path(out_dir, "loss_" + name + ".csv"), history);
    write_config_echo(join_path(out_dir, "config.txt"), "experiment " + table, kv);

    write_report_summary(out, reports);
    return 0;
}

inline int cmd_gradcheck(const KeyValues& kv, std::ostream& out) {
    reject_unknown(kv, {"seed", "configs"}, "gradcheck");
    const std::uint64_t seed = get_seed(kv, "seed", 7);
    const int configs = static_cast<int>(get_long(kv, "configs", 20));
    const double worst = run_gradcheck_suite(seed, configs);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    out << "gradcheck: max relative error " << buf << " over " << configs << " configurations\n";
    if (worst >= 1e-4) throw std::runtime_error("gradcheck: max relative error above 1e-4");
    return 0;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    static const char* usage =
        "usage: ganser <command> [options]\n"
        "  synth-corpus --out corpus.csv [--spec spec.txt] [--seed N]\n"
        "  train <aae|gan-vanilla|gan-cond-baseline|gan-cond-improved> --corpus c.csv --out dir [options]\n"
        "  generate --checkpoint gan.ckpt --n N --out file.csv [--class name] [--seed N] [--prior p.txt]\n"
        "  experiment <table1|table2|table3> --corpus c.csv --out dir [--corpus2 c2.csv] [options]\n"
        "  gradcheck [--seed N] [--configs N]\n"
        "options may also come from --config file (flat key = value lines); flags override the file\n";
    try {
        if (args.empty()) throw UsageError("no command given");
        const std::string& command = args[0];
        if (command == "help" || command == "--help" || command == "-h") {
            out << usage;
            return 0;
        }
        if (command == "synth-corpus") return cmd_synth_corpus(parse_options(args, 1), out);
        if (command == "train") {
            if (args.size() < 2 || args[1].rfind("--", 0) == 0) throw UsageError("train requires a kind argument");
            return cmd_train(args[1], parse_options(args, 2), out);
        }
        if (command == "generate") return cmd_generate(parse_options(args, 1), out);
        if (command == "experiment") {
            if (args.size() < 2 || args[1].rfind("--", 0) == 0)
                throw UsageError("experiment requires a table argument");
            return cmd_experiment(args[1], parse_options(args, 2), out);
        }
        if (command == "gradcheck") return cmd_gradcheck(parse_options(args, 1), out);
        throw UsageError("unknown command '" + command + "'");
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << usage;
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ganser
