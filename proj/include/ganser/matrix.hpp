// Dense row-major matrix and the handful of products the training loops need.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ganser {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimensions");
    }

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
    std::span<double> row_span(int i) { return {row(i), static_cast<std::size_t>(cols)}; }

    bool empty() const { return rows == 0 || cols == 0; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }
};

inline bool all_finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

// C = A * B^T
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_bt: shape mismatch " + a.shape_str() + " * " + b.shape_str() + "^T");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
    return c;
}

// C = A^T * B
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_at: shape mismatch " + a.shape_str() + "^T * " + b.shape_str());
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

inline void add_row_vector(Matrix& m, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != m.cols)
        throw std::invalid_argument("add_row_vector: length mismatch");
    for (int i = 0; i < m.rows; ++i) {
        double* ri = m.row(i);
        for (int j = 0; j < m.cols; ++j) ri[j] += v[j];
    }
}

inline std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* ri = m.row(i);
        for (int j = 0; j < m.cols; ++j) s[j] += ri[j];
    }
    return s;
}

inline Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("hconcat: row count mismatch " + a.shape_str() + " | " + b.shape_str());
    Matrix c(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (int j = 0; j < a.cols; ++j) ci[j] = ai[j];
        for (int j = 0; j < b.cols; ++j) ci[a.cols + j] = bi[j];
    }
    return c;
}

inline Matrix vconcat(const Matrix& a, const Matrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.cols != b.cols)
        throw std::invalid_argument("vconcat: column count mismatch " + a.shape_str() + " / " + b.shape_str());
    Matrix c(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), c.data.begin());
    std::copy(b.data.begin(), b.data.end(), c.data.begin() + a.data.size());
    return c;
}

inline Matrix one_hot(const std::vector<int>& indices, int width) {
    Matrix m(static_cast<int>(indices.size()), width);
    for (int i = 0; i < m.rows; ++i) {
        if (indices[i] < 0 || indices[i] >= width) throw std::invalid_argument("one_hot: index out of range");
        m(i, indices[i]) = 1.0;
    }
    return m;
}

inline Matrix take_rows(const Matrix& m, const std::vector<int>& idx) {
    Matrix c(static_cast<int>(idx.size()), m.cols);
    for (int i = 0; i < c.rows; ++i) {
        if (idx[i] < 0 || idx[i] >= m.rows) throw std::invalid_argument("take_rows: index out of range");
        const double* src = m.row(idx[i]);
        std::copy(src, src + m.cols, c.row(i));
    }
    return c;
}

}  // namespace ganser
