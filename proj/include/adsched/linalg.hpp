#pragma once
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace adsched {

using Vec = std::vector<double>;

// Small dense row-major matrix. Sizes here are tiny (states x states), so
// plain loops beat any BLAS dependency.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * size_t(c), fill) {}

    static Mat from_rows(std::initializer_list<std::initializer_list<double>> rs) {
        Mat m(int(rs.size()), rs.size() ? int(rs.begin()->size()) : 0);
        int i = 0;
        for (const auto& row : rs) {
            assert(int(row.size()) == m.cols);
            int j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    double& operator()(int i, int j) { return data[size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return data[size_t(i) * cols + j]; }

    Vec row(int i) const {
        return Vec(data.begin() + size_t(i) * cols, data.begin() + size_t(i + 1) * cols);
    }
    bool empty() const { return rows == 0 || cols == 0; }
};

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sum(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
}

// y = A x
inline Vec mul(const Mat& a, const Vec& x) {
    assert(int(x.size()) == a.cols);
    Vec y(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

// y = A' x  (used for the predictor step: A row-stochastic, x a belief)
inline Vec transpose_mul(const Mat& a, const Vec& x) {
    assert(int(x.size()) == a.rows);
    Vec y(a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int j = 0; j < a.cols; ++j) y[j] += a(i, j) * xi;
    }
    return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    assert(a.cols == b.rows);
    Mat c(a.rows, b.cols, 0.0);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double v = a(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c(i, j) += v * b(k, j);
        }
    return c;
}

inline Mat identity(int n) {
    Mat m(n, n, 0.0);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline bool is_prob_vector(const Vec& p, double tol) {
    for (double v : p)
        if (!(v >= -tol) || !std::isfinite(v)) return false;
    return std::fabs(sum(p) - 1.0) <= tol;
}

inline bool is_row_stochastic(const Mat& m, double tol) {
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            double v = m(i, j);
            if (!(v >= -tol) || !std::isfinite(v)) return false;
            s += v;
        }
        if (std::fabs(s - 1.0) > tol) return false;
    }
    return true;
}

inline void normalize(Vec& p) {
    double s = sum(p);
    if (s > 0.0)
        for (double& v : p) v /= s;
}

}  // namespace adsched
