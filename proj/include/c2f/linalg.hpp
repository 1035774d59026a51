#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace c2f {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough here that no BLAS is warranted.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    void set_row(std::size_t i, const Vec& v) {
        assert(v.size() == cols);
        for (std::size_t j = 0; j < cols; ++j) (*this)(i, j) = v[j];
    }
    Vec get_row(std::size_t i) const { return Vec(row(i), row(i) + cols); }
};

inline double dot(const Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double dot_rows(const Mat& m, std::size_t i, std::size_t j) {
    const double* xi = m.row(i);
    const double* xj = m.row(j);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += xi[c] * xj[c];
    return s;
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// out_i = row_i(W) . x + b_i
inline Vec matvec_bias(const Mat& w, const Vec& x, const Vec& b) {
    assert(w.cols == x.size() && w.rows == b.size());
    Vec out(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* wr = w.row(i);
        double s = b[i];
        for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * x[j];
        out[i] = s;
    }
    return out;
}

inline double l2_norm(const Vec& x) { return std::sqrt(dot(x, x)); }

// Stable logistic; never overflows for any finite x.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Shifted softmax (max subtraction); identical output, no overflow.
inline Vec softmax(const Vec& logits) {
    assert(!logits.empty());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    Vec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

// d/dlogits for y = softmax(logits): dl_j = y_j * (dy_j - sum_t dy_t y_t)
inline Vec softmax_backward(const Vec& y, const Vec& dy) {
    assert(y.size() == dy.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) acc += dy[t] * y[t];
    Vec dl(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) dl[j] = y[j] * (dy[j] - acc);
    return dl;
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.a); }

}  // namespace c2f
