// Feature-corpus ingestion, persistence, normalization, session splits, and a
// synthetic low-rank-plus-noise corpus generator that stands in for licensed
// emotion corpora at desk scale.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/matrix.hpp"
#include "ganser/rng.hpp"

namespace ganser {

struct CorpusRow {
    std::string id;
    int session = 0;  // positive
    std::string label;
    std::vector<double> features;
};

struct FeatureCorpus {
    int feature_dim = 0;
    std::vector<CorpusRow> rows;
    std::vector<std::string> classes;  // sorted, distinct

    std::set<int> sessions() const {
        std::set<int> s;
        for (const CorpusRow& r : rows) s.insert(r.session);
        return s;
    }

    std::map<std::string, int> class_histogram() const {
        std::map<std::string, int> h;
        for (const CorpusRow& r : rows) h[r.label] += 1;
        return h;
    }
};

namespace detail {

inline bool plain_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c == ',' || c == '\n' || c == '\r' || std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace detail

inline void validate_corpus(const FeatureCorpus& corpus) {
    if (corpus.feature_dim <= 0) throw std::invalid_argument("corpus: feature_dim must be positive");
    std::set<std::string> ids;
    std::set<std::string> class_set(corpus.classes.begin(), corpus.classes.end());
    if (class_set.size() != corpus.classes.size()) throw std::invalid_argument("corpus: duplicate class names");
    if (!std::is_sorted(corpus.classes.begin(), corpus.classes.end()))
        throw std::invalid_argument("corpus: class list must be sorted");
    for (const CorpusRow& r : corpus.rows) {
        if (!detail::plain_token(r.id)) throw std::invalid_argument("corpus: bad row id '" + r.id + "'");
        if (!ids.insert(r.id).second) throw std::invalid_argument("corpus: duplicate row id '" + r.id + "'");
        if (r.session <= 0) throw std::invalid_argument("corpus: session must be positive for row " + r.id);
        if (class_set.find(r.label) == class_set.end())
            throw std::invalid_argument("corpus: label '" + r.label + "' not in class list");
        if (static_cast<int>(r.features.size()) != corpus.feature_dim)
            throw std::invalid_argument("corpus: feature width mismatch for row " + r.id);
        if (!all_finite(r.features)) throw std::invalid_argument("corpus: non-finite feature for row " + r.id);
    }
}

inline Matrix corpus_features(const FeatureCorpus& corpus) {
    Matrix m(static_cast<int>(corpus.rows.size()), corpus.feature_dim);
    for (int i = 0; i < m.rows; ++i)
        std::copy(corpus.rows[i].features.begin(), corpus.rows[i].features.end(), m.row(i));
    return m;
}

inline std::vector<std::string> corpus_labels(const FeatureCorpus& corpus) {
    std::vector<std::string> y;
    y.reserve(corpus.rows.size());
    for (const CorpusRow& r : corpus.rows) y.push_back(r.label);
    return y;
}

// ----- persistence: comma-separated text, header id,session,label,f0..f{d-1}

inline void save_corpus(const FeatureCorpus& corpus, const std::string& path) {
    validate_corpus(corpus);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_corpus: cannot open " + path);
    os << "id,session,label";
    for (int j = 0; j < corpus.feature_dim; ++j) os << ",f" << j;
    os << "\n";
    char buf[40];
    for (const CorpusRow& r : corpus.rows) {
        os << r.id << "," << r.session << "," << r.label;
        for (double v : r.features) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw std::runtime_error("save_corpus: write failed for " + path);
}

inline FeatureCorpus load_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_corpus: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("load_corpus: empty file " + path);
    if (line.rfind("id,session,label", 0) != 0)
        throw std::runtime_error("load_corpus: bad header in " + path);
    const int dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 2;
    if (dim <= 0) throw std::runtime_error("load_corpus: header declares no feature columns in " + path);

    FeatureCorpus corpus;
    corpus.feature_dim = dim;
    std::set<std::string> class_set;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        CorpusRow row;
        std::size_t pos = 0;
        auto next_field = [&](bool last) {
            const std::size_t comma = line.find(',', pos);
            if (!last && comma == std::string::npos)
                throw std::runtime_error("load_corpus: line " + std::to_string(line_no) + ": too few fields");
            std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma == std::string::npos ? line.size() + 1 : comma + 1;
            return field;
        };
        row.id = next_field(false);
        try {
            row.session = std::stoi(next_field(false));
        } catch (const std::exception&) {
            throw std::runtime_error("load_corpus: line " + std::to_string(line_no) + ": bad session");
        }
        row.label = next_field(false);
        row.features.reserve(dim);
        for (int j = 0; j < dim; ++j) {
            const bool last = j + 1 == dim;
            std::string field = next_field(last);
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
                throw std::runtime_error("load_corpus: line " + std::to_string(line_no) + ": bad feature value '" +
                                         field + "'");
            row.features.push_back(v);
        }
        if (pos <= line.size())
            throw std::runtime_error("load_corpus: line " + std::to_string(line_no) + ": too many fields");
        class_set.insert(row.label);
        corpus.rows.push_back(std::move(row));
    }
    corpus.classes.assign(class_set.begin(), class_set.end());
    validate_corpus(corpus);
    return corpus;
}

// ----- synthetic corpus generation

struct ClassSpec {
    std::string name;
    int count = 0;
};

struct SynthCorpusSpec {
    int feature_dim = 64;
    std::vector<ClassSpec> classes = {{"angry", 200}, {"happy", 200}, {"neutral", 200}, {"sad", 200}};
    int sessions = 5;
    int latent_dim = 4;
    double class_mean_scale = 0.25;
    double mixing_scale = 1.0;
    double noise_scale = 0.5;
    double session_shift_scale = 0.3;
    std::uint64_t recipe_seed = 7;
    // Distribution shift for cross-corpus experiments: per-class mean offsets
    // drawn at shift_scale from shift_seed.
    double shift_scale = 0.0;
    std::uint64_t shift_seed = 0;

    // Stress-scale variant matching the dimensionality of openSMILE emobase2010 vectors.
    static SynthCorpusSpec paper_scale() {
        SynthCorpusSpec spec;
        spec.feature_dim = 1582;
        spec.classes = {{"angry", 150}, {"happy", 150}, {"neutral", 150}, {"sad", 150}};
        return spec;
    }

    // Class counts scaled from the 1708/1103/1084/1636 imbalance of the
    // reference emotion corpora.
    static SynthCorpusSpec imbalanced(int total) {
        if (total < 4) throw std::invalid_argument("SynthCorpusSpec: total must be >= 4");
        SynthCorpusSpec spec;
        const std::vector<std::pair<std::string, double>> ratios = {
            {"angry", 1103.0}, {"happy", 1636.0}, {"neutral", 1708.0}, {"sad", 1084.0}};
        const double denom = 1103.0 + 1636.0 + 1708.0 + 1084.0;
        spec.classes.clear();
        int assigned = 0;
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            int c = i + 1 == ratios.size() ? total - assigned
                                           : std::max(1, static_cast<int>(std::lround(total * ratios[i].second / denom)));
            spec.classes.push_back({ratios[i].first, c});
            assigned += c;
        }
        return spec;
    }
};

inline void validate_spec(const SynthCorpusSpec& spec) {
    if (spec.feature_dim <= 0) throw std::invalid_argument("SynthCorpusSpec: feature_dim must be positive");
    if (spec.classes.empty()) throw std::invalid_argument("SynthCorpusSpec: no classes");
    std::set<std::string> names;
    for (const ClassSpec& c : spec.classes) {
        if (!detail::plain_token(c.name)) throw std::invalid_argument("SynthCorpusSpec: bad class name");
        if (!names.insert(c.name).second) throw std::invalid_argument("SynthCorpusSpec: duplicate class name");
        if (c.count < 1) throw std::invalid_argument("SynthCorpusSpec: per-class count must be >= 1");
    }
    if (spec.sessions < 1) throw std::invalid_argument("SynthCorpusSpec: sessions must be >= 1");
    if (spec.latent_dim < 1) throw std::invalid_argument("SynthCorpusSpec: latent_dim must be >= 1");
    if (!(spec.noise_scale > 0.0)) throw std::invalid_argument("SynthCorpusSpec: noise_scale must be positive");
    if (spec.session_shift_scale < 0.0 || spec.class_mean_scale < 0.0 || spec.mixing_scale < 0.0 ||
        spec.shift_scale < 0.0)
        throw std::invalid_argument("SynthCorpusSpec: scales must be non-negative");
}

// Per class c: features = mean_c + M_c * z + session_shift + noise. A pure
// function of (spec, seed).
inline FeatureCorpus generate_synth_corpus(const SynthCorpusSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    const int d = spec.feature_dim;

    std::vector<ClassSpec> classes = spec.classes;
    std::sort(classes.begin(), classes.end(), [](const ClassSpec& a, const ClassSpec& b) { return a.name < b.name; });

    // Recipe draws depend only on the spec, so corpora sampled with different
    // seeds share the same underlying class structure.
    Rng recipe(mix_seed(spec.recipe_seed, 0x726563697065));
    std::vector<std::vector<double>> class_means(classes.size(), std::vector<double>(d));
    std::vector<Matrix> mixing(classes.size());
    const double mix_sd = spec.mixing_scale / std::sqrt(static_cast<double>(spec.latent_dim));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        for (double& v : class_means[c]) v = recipe.normal(0.0, spec.class_mean_scale);
        mixing[c] = Matrix(d, spec.latent_dim);
        for (double& v : mixing[c].data) v = recipe.normal(0.0, mix_sd);
    }
    std::vector<std::vector<double>> session_shift(spec.sessions, std::vector<double>(d, 0.0));
    for (auto& shift : session_shift)
        for (double& v : shift) v = recipe.normal(0.0, spec.session_shift_scale);
    if (spec.shift_scale > 0.0) {
        Rng shift_rng(mix_seed(spec.shift_seed, 0x7368696674));
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (double& v : class_means[c]) v += shift_rng.normal(0.0, spec.shift_scale);
    }

    Rng sampler(mix_seed(seed, 0x73616d706c65));
    FeatureCorpus corpus;
    corpus.feature_dim = d;
    for (const ClassSpec& c : classes) corpus.classes.push_back(c.name);

    std::vector<double> z(spec.latent_dim);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        int emitted = 0;
        for (int s = 1; s <= spec.sessions; ++s) {
            const int base = classes[c].count / spec.sessions;
            const int extra = s <= classes[c].count % spec.sessions ? 1 : 0;
            for (int i = 0; i < base + extra; ++i) {
                CorpusRow row;
                row.session = s;
                row.label = classes[c].name;
                // seed-tagged ids keep rows distinguishable across corpora
                row.id = "c" + std::to_string(seed) + "-" + classes[c].name + "-s" + std::to_string(s) + "-" +
                         std::to_string(emitted++);
                for (double& v : z) v = sampler.normal();
                row.features.resize(d);
                const Matrix& m = mixing[c];
                for (int j = 0; j < d; ++j) {
                    double v = class_means[c][j] + session_shift[s - 1][j];
                    const double* mj = m.row(j);
                    for (int l = 0; l < spec.latent_dim; ++l) v += mj[l] * z[l];
                    row.features[j] = v + sampler.normal(0.0, spec.noise_scale);
                }
                corpus.rows.push_back(std::move(row));
            }
        }
    }
    validate_corpus(corpus);
    return corpus;
}

// ----- spec file: flat key-value text

inline void save_spec(const SynthCorpusSpec& spec, const std::string& path) {
    validate_spec(spec);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_spec: cannot open " + path);
    char buf[40];
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << key << " = " << buf << "\n";
    };
    os << "feature_dim = " << spec.feature_dim << "\n";
    os << "sessions = " << spec.sessions << "\n";
    os << "latent_dim = " << spec.latent_dim << "\n";
    for (const ClassSpec& c : spec.classes) os << "class = " << c.name << " " << c.count << "\n";
    put("class_mean_scale", spec.class_mean_scale);
    put("mixing_scale", spec.mixing_scale);
    put("noise_scale", spec.noise_scale);
    put("session_shift_scale", spec.session_shift_scale);
    put("shift_scale", spec.shift_scale);
    os << "recipe_seed = " << spec.recipe_seed << "\n";
    os << "shift_seed = " << spec.shift_seed << "\n";
}

inline SynthCorpusSpec load_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_spec: cannot open " + path);
    SynthCorpusSpec spec;
    spec.classes.clear();
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, eq;
        if (!(ls >> key >> eq) || eq != "=")
            throw std::runtime_error("load_spec: line " + std::to_string(line_no) + ": expected 'key = value'");
        auto num = [&](auto& target) {
            if (!(ls >> target))
                throw std::runtime_error("load_spec: line " + std::to_string(line_no) + ": bad value for " + key);
        };
        if (key == "feature_dim") num(spec.feature_dim);
        else if (key == "sessions") num(spec.sessions);
        else if (key == "latent_dim") num(spec.latent_dim);
        else if (key == "class_mean_scale") num(spec.class_mean_scale);
        else if (key == "mixing_scale") num(spec.mixing_scale);
        else if (key == "noise_scale") num(spec.noise_scale);
        else if (key == "session_shift_scale") num(spec.session_shift_scale);
        else if (key == "shift_scale") num(spec.shift_scale);
        else if (key == "recipe_seed") num(spec.recipe_seed);
        else if (key == "shift_seed") num(spec.shift_seed);
        else if (key == "class") {
            ClassSpec c;
            num(c.name);
            num(c.count);
            spec.classes.push_back(std::move(c));
        } else {
            throw std::runtime_error("load_spec: line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    validate_spec(spec);
    return spec;
}

// ----- normalization

struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;  // floored at 1e-8

    int dim() const { return static_cast<int>(mean.size()); }
};

inline Normalizer identity_normalizer(int dim) {
    Normalizer n;
    n.mean.assign(dim, 0.0);
    n.stddev.assign(dim, 1.0);
    return n;
}

inline Normalizer fit_normalizer(const Matrix& data) {
    if (data.rows == 0 || data.cols == 0) throw std::invalid_argument("fit_normalizer: empty data");
    Normalizer n;
    n.mean.assign(data.cols, 0.0);
    n.stddev.assign(data.cols, 0.0);
    for (int i = 0; i < data.rows; ++i) {
        const double* r = data.row(i);
        for (int j = 0; j < data.cols; ++j) n.mean[j] += r[j];
    }
    for (double& m : n.mean) m /= data.rows;
    for (int i = 0; i < data.rows; ++i) {
        const double* r = data.row(i);
        for (int j = 0; j < data.cols; ++j) {
            const double d = r[j] - n.mean[j];
            n.stddev[j] += d * d;
        }
    }
    for (double& s : n.stddev) s = std::max(std::sqrt(s / data.rows), 1e-8);
    return n;
}

inline Normalizer fit_normalizer(const FeatureCorpus& corpus) {
    if (corpus.rows.empty()) throw std::invalid_argument("fit_normalizer: empty corpus");
    return fit_normalizer(corpus_features(corpus));
}

inline Matrix apply_normalizer(const Normalizer& n, const Matrix& data) {
    if (data.cols != n.dim()) throw std::invalid_argument("apply_normalizer: width mismatch");
    Matrix out = data;
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        for (int j = 0; j < out.cols; ++j) r[j] = (r[j] - n.mean[j]) / n.stddev[j];
    }
    return out;
}

inline Matrix invert_normalizer(const Normalizer& n, const Matrix& data) {
    if (data.cols != n.dim()) throw std::invalid_argument("invert_normalizer: width mismatch");
    Matrix out = data;
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        for (int j = 0; j < out.cols; ++j) r[j] = r[j] * n.stddev[j] + n.mean[j];
    }
    return out;
}

// ----- leave-one-session-out splitting

inline std::pair<FeatureCorpus, FeatureCorpus> split_by_session(const FeatureCorpus& corpus, int held_out_session) {
    const std::set<int> sessions = corpus.sessions();
    if (sessions.find(held_out_session) == sessions.end())
        throw std::invalid_argument("split_by_session: unknown session " + std::to_string(held_out_session));
    FeatureCorpus train, test;
    train.feature_dim = test.feature_dim = corpus.feature_dim;
    for (const CorpusRow& r : corpus.rows) (r.session == held_out_session ? test : train).rows.push_back(r);
    auto rebuild_classes = [](FeatureCorpus& c) {
        std::set<std::string> s;
        for (const CorpusRow& r : c.rows) s.insert(r.label);
        c.classes.assign(s.begin(), s.end());
    };
    rebuild_classes(train);
    rebuild_classes(test);
    return {std::move(train), std::move(test)};
}

}  // namespace ganser
