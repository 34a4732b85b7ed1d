// RBF-kernel soft-margin SVM trained by sequential minimal optimization, with
// one-vs-one voting. Working pairs are chosen by maximal KKT violation; the
// solver stops when the violation gap closes within 2*tol, which bounds every
// margin's KKT slack by tol.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/checkpoint.hpp"
#include "ganser/corpus.hpp"
#include "ganser/matrix.hpp"

namespace ganser {

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be positive");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-gamma * sq);
}

struct SvmConfig {
    double C = 1.0;
    double gamma = 0.0;  // 0 = 1 / (dim * mean feature variance) on normalized data
    double tol = 1e-3;
    long max_iterations = 0;  // 0 = max(20000, 200 * n)
};

struct PairMachine {
    int class_a = 0, class_b = 0;  // indices into SvmModel::classes, a < b; +1 side is class_a
    Matrix support_vectors;
    std::vector<double> dual_coef;  // alpha_i * t_i, in [-C, C]
    double bias = 0.0;
};

struct SvmModel {
    std::vector<std::string> classes;  // sorted; also the tie-break order
    Normalizer norm;
    double gamma = 0.0;
    double C = 0.0;
    double tol = 0.0;
    int feature_dim = 0;
    std::vector<PairMachine> machines;
};

struct PairDiagnostics {
    int class_a = 0, class_b = 0;
    std::vector<int> row_indices;  // into the training matrix
    std::vector<double> alpha;     // in [0, C]
    std::vector<double> target;    // +1 / -1
    double dual_objective = 0.0;   // sum(alpha) - 1/2 sum alpha_i alpha_j t_i t_j K_ij
    double bias = 0.0;
    double kkt_max_violation = 0.0;
    bool converged = false;
};

struct SvmDiagnostics {
    std::vector<PairDiagnostics> pairs;
};

namespace detail {

struct SmoResult {
    std::vector<double> alpha;
    double bias = 0.0;
    double dual_objective = 0.0;
    bool converged = false;
};

// Two-variable ascent on the dual with maximal-violating-pair selection.
inline SmoResult smo_solve(const Matrix& gram, const std::vector<double>& t, double C, double tol,
                           long max_iterations) {
    const int n = gram.rows;
    SmoResult res;
    res.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 aQa - e.a; Q_ij = t_i t_j K_ij

    auto in_up = [&](int i) { return (t[i] > 0 && res.alpha[i] < C) || (t[i] < 0 && res.alpha[i] > 0); };
    auto in_low = [&](int i) { return (t[i] > 0 && res.alpha[i] > 0) || (t[i] < 0 && res.alpha[i] < C); };

    double m_final = 0.0, big_m_final = 0.0;
    long iter = 0;
    for (; iter < max_iterations; ++iter) {
        int i = -1, j = -1;
        double m = -1e300, big_m = 1e300;
        for (int k = 0; k < n; ++k) {
            const double v = -t[k] * grad[k];
            if (in_up(k) && v > m) {
                m = v;
                i = k;
            }
            if (in_low(k) && v < big_m) {
                big_m = v;
                j = k;
            }
        }
        m_final = m;
        big_m_final = big_m;
        if (i < 0 || j < 0 || m - big_m <= 2.0 * tol) {
            res.converged = true;
            break;
        }

        const double kii = gram(i, i), kjj = gram(j, j), kij = gram(i, j);
        double ai = res.alpha[i], aj = res.alpha[j];
        const double old_ai = ai, old_aj = aj;
        if (t[i] != t[j]) {
            double quad = kii + kjj + 2.0 * kij;
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = -diff; }
            }
            if (diff > 0.0) {
                if (ai > C) { ai = C; aj = C - diff; }
            } else {
                if (aj > C) { aj = C; ai = C + diff; }
            }
        } else {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) { ai = C; aj = sum - C; }
            } else {
                if (aj < 0.0) { aj = 0.0; ai = sum; }
            }
            if (sum > C) {
                if (aj > C) { aj = C; ai = sum - C; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = sum; }
            }
        }
        res.alpha[i] = ai;
        res.alpha[j] = aj;
        const double dai = ai - old_ai, daj = aj - old_aj;
        if (dai == 0.0 && daj == 0.0) {
            // numerically stalled; treat the remaining gap as converged-enough
            res.converged = m - big_m <= 2.0 * tol;
            break;
        }
        const double* gi = gram.row(i);
        const double* gj = gram.row(j);
        for (int k = 0; k < n; ++k) grad[k] += t[k] * (t[i] * dai * gi[k] + t[j] * daj * gj[k]);
    }
    if (iter >= max_iterations)
        std::cerr << "svm: SMO hit the iteration cap (" << max_iterations << ") before converging; gap "
                  << (m_final - big_m_final) << "\n";

    res.bias = (m_final + big_m_final) / 2.0;
    double lin = 0.0, quad_term = 0.0;
    for (int k = 0; k < n; ++k) {
        lin += res.alpha[k];
        // grad_k = t_k * G_k - 1 with G_k = sum_j alpha_j t_j K_jk
        quad_term += res.alpha[k] * (grad[k] + 1.0);
    }
    res.dual_objective = lin - 0.5 * quad_term;
    return res;
}

}  // namespace detail

inline SvmModel train_svm(const Matrix& X, const std::vector<std::string>& y, const SvmConfig& cfg = {},
                          SvmDiagnostics* diag = nullptr) {
    if (X.rows == 0 || X.rows != static_cast<int>(y.size()))
        throw std::invalid_argument("train_svm: X rows and label count must match and be non-empty");
    if (!(cfg.C > 0.0)) throw std::invalid_argument("train_svm: C must be positive");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("train_svm: tol must be positive");

    SvmModel model;
    std::set<std::string> class_set(y.begin(), y.end());
    if (class_set.size() < 2) throw std::invalid_argument("train_svm: need at least two classes");
    model.classes.assign(class_set.begin(), class_set.end());
    model.C = cfg.C;
    model.tol = cfg.tol;
    model.feature_dim = X.cols;
    model.norm = fit_normalizer(X);
    const Matrix Xn = apply_normalizer(model.norm, X);

    if (cfg.gamma > 0.0) {
        model.gamma = cfg.gamma;
    } else {
        double var_sum = 0.0;
        for (int j = 0; j < Xn.cols; ++j) {
            double mean = 0.0, sq = 0.0;
            for (int i = 0; i < Xn.rows; ++i) mean += Xn(i, j);
            mean /= Xn.rows;
            for (int i = 0; i < Xn.rows; ++i) {
                const double d = Xn(i, j) - mean;
                sq += d * d;
            }
            var_sum += sq / Xn.rows;
        }
        const double mean_var = var_sum / Xn.cols;
        model.gamma = 1.0 / (X.cols * std::max(mean_var, 1e-12));
    }

    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < model.classes.size(); ++i) class_index[model.classes[i]] = static_cast<int>(i);

    const int k = static_cast<int>(model.classes.size());
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            std::vector<int> rows;
            std::vector<double> t;
            for (int i = 0; i < Xn.rows; ++i) {
                const int ci = class_index[y[i]];
                if (ci == a || ci == b) {
                    rows.push_back(i);
                    t.push_back(ci == a ? 1.0 : -1.0);
                }
            }
            const Matrix Xp = take_rows(Xn, rows);
            const int n = Xp.rows;
            Matrix gram(n, n);
            for (int i = 0; i < n; ++i) {
                gram(i, i) = 1.0;
                for (int j = i + 1; j < n; ++j) {
                    const double v = rbf_kernel(Xp.row_span(i), Xp.row_span(j), model.gamma);
                    gram(i, j) = v;
                    gram(j, i) = v;
                }
            }
            const long cap = cfg.max_iterations > 0 ? cfg.max_iterations : std::max(20000L, 200L * n);
            detail::SmoResult sol = detail::smo_solve(gram, t, cfg.C, cfg.tol, cap);

            PairMachine machine;
            machine.class_a = a;
            machine.class_b = b;
            machine.bias = sol.bias;
            std::vector<int> sv_rows;
            for (int i = 0; i < n; ++i) {
                if (sol.alpha[i] > 0.0) {
                    sv_rows.push_back(i);
                    machine.dual_coef.push_back(sol.alpha[i] * t[i]);
                }
            }
            if (sv_rows.empty()) {
                // degenerate but keep the contract of one SV per machine
                sv_rows.push_back(0);
                machine.dual_coef.push_back(0.0);
            }
            machine.support_vectors = take_rows(Xp, sv_rows);

            if (diag) {
                PairDiagnostics pd;
                pd.class_a = a;
                pd.class_b = b;
                pd.row_indices = rows;
                pd.alpha = sol.alpha;
                pd.target = t;
                pd.dual_objective = sol.dual_objective;
                pd.bias = sol.bias;
                pd.converged = sol.converged;
                double worst = 0.0;
                for (int i = 0; i < n; ++i) {
                    double g = 0.0;
                    for (int j = 0; j < n; ++j) g += sol.alpha[j] * t[j] * gram(i, j);
                    const double margin = t[i] * (g + sol.bias);
                    double viol = 0.0;
                    if (sol.alpha[i] <= 1e-12) viol = std::max(0.0, 1.0 - margin);
                    else if (sol.alpha[i] >= cfg.C - 1e-12) viol = std::max(0.0, margin - 1.0);
                    else viol = std::fabs(margin - 1.0);
                    worst = std::max(worst, viol);
                }
                pd.kkt_max_violation = worst;
                diag->pairs.push_back(std::move(pd));
            }
            model.machines.push_back(std::move(machine));
        }
    }
    return model;
}

// Decision value of one pairwise machine on a raw (unnormalized) input row.
inline double decision_value(const SvmModel& model, const PairMachine& machine, std::span<const double> x_raw) {
    if (static_cast<int>(x_raw.size()) != model.feature_dim)
        throw std::invalid_argument("decision_value: width mismatch");
    std::vector<double> x(x_raw.begin(), x_raw.end());
    for (int j = 0; j < model.feature_dim; ++j) x[j] = (x[j] - model.norm.mean[j]) / model.norm.stddev[j];
    double f = machine.bias;
    for (int s = 0; s < machine.support_vectors.rows; ++s)
        f += machine.dual_coef[s] * rbf_kernel(machine.support_vectors.row_span(s), std::span<const double>(x), model.gamma);
    return f;
}

struct PredictVotes {
    std::vector<std::string> labels;
    Matrix votes;  // n x class count
};

inline PredictVotes predict_with_votes(const SvmModel& model, const Matrix& X) {
    if (X.rows > 0 && X.cols != model.feature_dim)
        throw std::invalid_argument("predict: width " + std::to_string(X.cols) + " does not match training dim " +
                                    std::to_string(model.feature_dim));
    PredictVotes out;
    out.votes = Matrix(X.rows, static_cast<int>(model.classes.size()));
    for (int i = 0; i < X.rows; ++i) {
        for (const PairMachine& machine : model.machines) {
            const double f = decision_value(model, machine, X.row_span(i));
            out.votes(i, f >= 0.0 ? machine.class_a : machine.class_b) += 1.0;
        }
        int best = 0;
        for (int c = 1; c < out.votes.cols; ++c)
            if (out.votes(i, c) > out.votes(i, best)) best = c;
        out.labels.push_back(model.classes[best]);
    }
    return out;
}

inline std::vector<std::string> predict(const SvmModel& model, const Matrix& X) {
    return predict_with_votes(model, X).labels;
}

inline void save_svm(const std::string& path, const SvmModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_svm: cannot open " + path);
    write_checkpoint_header(os);
    io::write_u8(os, kKindSvm);
    io::write_u32(os, static_cast<std::uint32_t>(model.classes.size()));
    for (const std::string& c : model.classes) io::write_string(os, c);
    io::write_f64(os, model.gamma);
    io::write_f64(os, model.C);
    io::write_f64(os, model.tol);
    io::write_u32(os, static_cast<std::uint32_t>(model.feature_dim));
    io::write_f64_vector(os, model.norm.mean);
    io::write_f64_vector(os, model.norm.stddev);
    io::write_u32(os, static_cast<std::uint32_t>(model.machines.size()));
    for (const PairMachine& m : model.machines) {
        io::write_u32(os, static_cast<std::uint32_t>(m.class_a));
        io::write_u32(os, static_cast<std::uint32_t>(m.class_b));
        io::write_f64(os, m.bias);
        io::write_u32(os, static_cast<std::uint32_t>(m.support_vectors.rows));
        for (double v : m.support_vectors.data) io::write_f64(os, v);
        io::write_f64_vector(os, m.dual_coef);
    }
    if (!os) throw std::runtime_error("save_svm: write failed for " + path);
}

inline SvmModel load_svm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_svm: cannot open " + path);
    read_checkpoint_header(is);
    if (io::read_u8(is) != kKindSvm) throw std::runtime_error("load_svm: not an SVM checkpoint: " + path);
    SvmModel model;
    const std::uint32_t classes = io::read_u32(is);
    for (std::uint32_t i = 0; i < classes; ++i) model.classes.push_back(io::read_string(is));
    model.gamma = io::read_f64(is);
    model.C = io::read_f64(is);
    model.tol = io::read_f64(is);
    model.feature_dim = static_cast<int>(io::read_u32(is));
    model.norm.mean = io::read_f64_vector(is);
    model.norm.stddev = io::read_f64_vector(is);
    const std::uint32_t machines = io::read_u32(is);
    for (std::uint32_t i = 0; i < machines; ++i) {
        PairMachine m;
        m.class_a = static_cast<int>(io::read_u32(is));
        m.class_b = static_cast<int>(io::read_u32(is));
        m.bias = io::read_f64(is);
        const std::uint32_t rows = io::read_u32(is);
        m.support_vectors = Matrix(static_cast<int>(rows), model.feature_dim);
        for (double& v : m.support_vectors.data) v = io::read_f64(is);
        m.dual_coef = io::read_f64_vector(is);
        model.machines.push_back(std::move(m));
    }
    return model;
}

}  // namespace ganser
