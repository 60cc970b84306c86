#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "stochlang/errors.hpp"

namespace stochlang {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Small dense row-major matrix. Systems here are at most a few hundred wide.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Vec apply(const Vec& x) const {
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += a_[i * cols_ + j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vec apply_transpose(const Vec& x) const {
        Vec y(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[j] += a_[i * cols_ + j] * x[i];
        return y;
    }

    bool non_negative() const {
        for (double v : a_)
            if (v < 0.0) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

inline constexpr double kSingularPivot = 1e-12;

// Gaussian elimination with partial pivoting. Throws SingularSystemError when
// the best remaining pivot falls below kSingularPivot in magnitude.
inline Vec solve_dense(Matrix m, Vec rhs) {
    std::size_t n = m.rows();
    if (m.cols() != n || rhs.size() != n) throw Error("solve_dense: shape mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(m(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::fabs(m(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < kSingularPivot)
            throw SingularSystemError("linear system is singular (best pivot " +
                                      std::to_string(best) + ")");
        if (piv != col) {
            for (std::size_t j = col; j < n; ++j) std::swap(m(piv, j), m(col, j));
            std::swap(rhs[piv], rhs[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = m(r, col) / m(col, col);
            if (f == 0.0) continue;
            m(r, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) m(r, j) -= f * m(col, j);
            rhs[r] -= f * rhs[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
        x[i] = s / m(i, i);
    }
    return x;
}

}  // namespace stochlang
