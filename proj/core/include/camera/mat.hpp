#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace camera {

/// Dense row-major matrix. The numeric core is templated on the scalar so
/// that training can run in f32 for production and f64 under test.
template <typename Real>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Real> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, Real fill = Real(0)) : rows(r), cols(c), v(r * c, fill) {}

    Real& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    const Real& at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    Real* row(std::size_t i) { return v.data() + i * cols; }
    const Real* row(std::size_t i) const { return v.data() + i * cols; }

    bool empty() const { return v.empty(); }
    std::size_t size() const { return v.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && v == o.v; }

    bool all_finite() const {
        for (Real x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

// out = a * b, (r x k) * (k x c)
template <typename Real>
void matmul(const Mat<Real>& a, const Mat<Real>& b, Mat<Real>& out) {
    assert(a.cols == b.rows);
    out = Mat<Real>(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const Real* ai = a.row(i);
        Real* oi = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const Real aik = ai[k];
            if (aik == Real(0)) continue;
            const Real* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) oi[j] += aik * bk[j];
        }
    }
}

// out = a^T * b, (k x r)^T * (k x c)
template <typename Real>
void matmul_at_b(const Mat<Real>& a, const Mat<Real>& b, Mat<Real>& out) {
    assert(a.rows == b.rows);
    out = Mat<Real>(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const Real* ak = a.row(k);
        const Real* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const Real aki = ak[i];
            if (aki == Real(0)) continue;
            Real* oi = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) oi[j] += aki * bk[j];
        }
    }
}

// out = a * b^T, (r x k) * (c x k)^T
template <typename Real>
void matmul_a_bt(const Mat<Real>& a, const Mat<Real>& b, Mat<Real>& out) {
    assert(a.cols == b.cols);
    out = Mat<Real>(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const Real* ai = a.row(i);
        Real* oi = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const Real* bj = b.row(j);
            Real s = 0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            oi[j] = s;
        }
    }
}

template <typename Real>
void add_row_vector(Mat<Real>& m, const std::vector<Real>& bias) {
    assert(m.cols == bias.size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        Real* mi = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) mi[j] += bias[j];
    }
}

template <typename Real>
std::vector<Real> column_sum(const Mat<Real>& m) {
    std::vector<Real> s(m.cols, Real(0));
    for (std::size_t i = 0; i < m.rows; ++i) {
        const Real* mi = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += mi[j];
    }
    return s;
}

template <typename Real>
std::vector<Real> column_mean(const Mat<Real>& m) {
    std::vector<Real> s = column_sum(m);
    if (m.rows > 0)
        for (Real& x : s) x /= Real(m.rows);
    return s;
}

template <typename Real>
Real frobenius_sq(const Mat<Real>& m) {
    Real s = 0;
    for (Real x : m.v) s += x * x;
    return s;
}

}  // namespace camera
