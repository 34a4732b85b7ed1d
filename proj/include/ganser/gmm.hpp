// Gaussian-mixture latent priors with diagonal covariances. One component per
// class; generated points are labeled by the component of highest membership.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganser/matrix.hpp"
#include "ganser/rng.hpp"

namespace ganser {

struct GmmComponent {
    std::vector<double> mean;
    std::vector<double> covariance;  // diagonal, entries > 0
    double weight = 0.0;
};

struct GmmPrior {
    std::vector<GmmComponent> components;
    std::vector<std::string> class_names;  // one per component

    int dim() const { return components.empty() ? 0 : static_cast<int>(components.front().mean.size()); }
    int component_count() const { return static_cast<int>(components.size()); }
};

inline void validate_prior(const GmmPrior& prior) {
    if (prior.components.empty()) throw std::invalid_argument("GmmPrior: no components");
    if (prior.class_names.size() != prior.components.size())
        throw std::invalid_argument("GmmPrior: class name count does not match component count");
    std::set<std::string> distinct(prior.class_names.begin(), prior.class_names.end());
    if (distinct.size() != prior.class_names.size())
        throw std::invalid_argument("GmmPrior: class names must be distinct");
    const std::size_t d = prior.components.front().mean.size();
    double weight_sum = 0.0;
    for (const GmmComponent& c : prior.components) {
        if (c.mean.size() != d || c.covariance.size() != d)
            throw std::invalid_argument("GmmPrior: inconsistent component dimensions");
        if (!all_finite(c.mean)) throw std::invalid_argument("GmmPrior: non-finite mean");
        for (double v : c.covariance)
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("GmmPrior: covariance entries must be positive");
        if (!(c.weight > 0.0)) throw std::invalid_argument("GmmPrior: weights must be positive");
        weight_sum += c.weight;
    }
    if (std::fabs(weight_sum - 1.0) > 1e-9)
        throw std::invalid_argument("GmmPrior: weights must sum to 1");
}

// Default 2-D prior: components on a circle of radius 4, isotropic sigma 0.5,
// equal weights. Separation >= 8 sigma keeps membership labels near-unambiguous.
inline GmmPrior make_circle_prior(const std::vector<std::string>& class_names, double radius = 4.0,
                                  double sigma = 0.5) {
    if (class_names.empty()) throw std::invalid_argument("make_circle_prior: need at least one class");
    GmmPrior prior;
    prior.class_names = class_names;
    const int k = static_cast<int>(class_names.size());
    for (int i = 0; i < k; ++i) {
        const double angle = 2.0 * 3.14159265358979323846 * i / k;
        GmmComponent c;
        c.mean = {radius * std::cos(angle), radius * std::sin(angle)};
        c.covariance = {sigma * sigma, sigma * sigma};
        c.weight = 1.0 / k;
        prior.components.push_back(std::move(c));
    }
    validate_prior(prior);
    return prior;
}

struct GmmSample {
    Matrix points;                     // n x dim
    std::vector<int> component_index;  // n
};

inline GmmSample sample(const GmmPrior& prior, int n, std::uint64_t seed,
                        std::optional<int> component = std::nullopt) {
    validate_prior(prior);
    if (n < 1) throw std::invalid_argument("gmm sample: n must be >= 1");
    if (component && (*component < 0 || *component >= prior.component_count()))
        throw std::invalid_argument("gmm sample: invalid component index " + std::to_string(*component));
    Rng rng(mix_seed(seed, 0x676d6d));
    const int d = prior.dim();
    GmmSample out;
    out.points = Matrix(n, d);
    out.component_index.resize(n);
    for (int i = 0; i < n; ++i) {
        int k;
        if (component) {
            k = *component;
        } else {
            const double u = rng.uniform();
            double acc = 0.0;
            k = prior.component_count() - 1;
            for (int j = 0; j < prior.component_count(); ++j) {
                acc += prior.components[j].weight;
                if (u < acc) {
                    k = j;
                    break;
                }
            }
        }
        out.component_index[i] = k;
        const GmmComponent& c = prior.components[k];
        double* row = out.points.row(i);
        for (int j = 0; j < d; ++j) row[j] = c.mean[j] + std::sqrt(c.covariance[j]) * rng.normal();
    }
    return out;
}

inline double log_component_density(const GmmComponent& c, std::span<const double> point) {
    constexpr double kLog2Pi = 1.8378770664093454836;
    double log_p = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double diff = point[j] - c.mean[j];
        log_p += -0.5 * (kLog2Pi + std::log(c.covariance[j]) + diff * diff / c.covariance[j]);
    }
    return log_p;
}

// Posterior membership probabilities, computed in log space.
inline std::vector<double> responsibilities(const GmmPrior& prior, std::span<const double> point) {
    validate_prior(prior);
    if (static_cast<int>(point.size()) != prior.dim())
        throw std::invalid_argument("responsibilities: point dim " + std::to_string(point.size()) +
                                    " does not match prior dim " + std::to_string(prior.dim()));
    std::vector<double> log_post(prior.components.size());
    for (std::size_t k = 0; k < prior.components.size(); ++k)
        log_post[k] = std::log(prior.components[k].weight) + log_component_density(prior.components[k], point);
    const double max_lp = *std::max_element(log_post.begin(), log_post.end());
    double total = 0.0;
    for (double& lp : log_post) {
        lp = std::exp(lp - max_lp);
        total += lp;
    }
    for (double& lp : log_post) lp /= total;
    return log_post;
}

// Argmax responsibility; ties break toward the lowest component index.
inline int assign_component(const GmmPrior& prior, std::span<const double> point) {
    const std::vector<double> r = responsibilities(prior, point);
    int best = 0;
    for (std::size_t k = 1; k < r.size(); ++k)
        if (r[k] > r[best]) best = static_cast<int>(k);
    return best;
}

inline std::vector<std::string> assign_class(const GmmPrior& prior, const Matrix& points) {
    validate_prior(prior);
    if (points.cols != prior.dim())
        throw std::invalid_argument("assign_class: point dim does not match prior dim");
    std::vector<std::string> labels;
    labels.reserve(points.rows);
    for (int i = 0; i < points.rows; ++i)
        labels.push_back(prior.class_names[assign_component(prior, points.row_span(i))]);
    return labels;
}

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Plain-text serialization; decimal form with 17 significant digits
// round-trips doubles exactly.
inline void write_prior(std::ostream& os, const GmmPrior& prior) {
    validate_prior(prior);
    os << "dim " << prior.dim() << "\n";
    os << "components " << prior.component_count() << "\n";
    for (int k = 0; k < prior.component_count(); ++k) {
        const GmmComponent& c = prior.components[k];
        os << "component " << k << "\n";
        os << "class " << prior.class_names[k] << "\n";
        os << "weight " << detail::fmt_g17(c.weight) << "\n";
        os << "mean";
        for (double v : c.mean) os << " " << detail::fmt_g17(v);
        os << "\n";
        os << "cov";
        for (double v : c.covariance) os << " " << detail::fmt_g17(v);
        os << "\n";
    }
}

inline GmmPrior read_prior(std::istream& is) {
    auto expect_key = [&](const char* key) {
        std::string word;
        if (!(is >> word) || word != key)
            throw std::runtime_error(std::string("prior file: expected '") + key + "', got '" + word + "'");
    };
    GmmPrior prior;
    int dim = 0, count = 0;
    expect_key("dim");
    if (!(is >> dim) || dim <= 0) throw std::runtime_error("prior file: bad dim");
    expect_key("components");
    if (!(is >> count) || count <= 0) throw std::runtime_error("prior file: bad component count");
    for (int k = 0; k < count; ++k) {
        expect_key("component");
        int idx;
        if (!(is >> idx) || idx != k) throw std::runtime_error("prior file: bad component index");
        GmmComponent c;
        expect_key("class");
        std::string cls;
        if (!(is >> cls)) throw std::runtime_error("prior file: bad class name");
        expect_key("weight");
        if (!(is >> c.weight)) throw std::runtime_error("prior file: bad weight");
        expect_key("mean");
        c.mean.resize(dim);
        for (double& v : c.mean)
            if (!(is >> v)) throw std::runtime_error("prior file: bad mean");
        expect_key("cov");
        c.covariance.resize(dim);
        for (double& v : c.covariance)
            if (!(is >> v)) throw std::runtime_error("prior file: bad covariance");
        prior.class_names.push_back(cls);
        prior.components.push_back(std::move(c));
    }
    validate_prior(prior);
    return prior;
}

inline void save_prior(const std::string& path, const GmmPrior& prior) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_prior: cannot open " + path);
    write_prior(os, prior);
}

inline GmmPrior load_prior(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_prior: cannot open " + path);
    return read_prior(is);
}

inline std::string prior_to_string(const GmmPrior& prior) {
    std::ostringstream os;
    write_prior(os, prior);
    return os.str();
}

inline GmmPrior prior_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_prior(is);
}

}  // namespace ganser
