#pragma once

// Independent oracles and generators for the unit tests. Nothing here calls
// into the library's numerical kernels; instances come from std::mt19937_64.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lipdoi/matrix.hpp"

namespace oracle {

using lipdoi::Matrix;

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = nd(gen);
    return m;
}

inline Matrix random_symmetric(std::size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) m(i, j) = m(j, i) = nd(gen);
    return m;
}

inline std::vector<double> random_vector(std::size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(d);
    for (double& x : v) x = nd(gen);
    return v;
}

inline Matrix product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline double frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

inline double distance(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    return std::sqrt(s);
}

// ||Q^T Q - I||_max
inline double orthonormality_defect(const Matrix& q) {
    double worst = 0.0;
    for (std::size_t a = 0; a < q.cols(); ++a)
        for (std::size_t b = 0; b < q.cols(); ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, a) * q(i, b);
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

// U diag(d) V^T
inline Matrix synthesize(const Matrix& u, const std::vector<double>& d, const Matrix& v) {
    Matrix out(u.rows(), v.rows());
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j < v.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d.size(); ++k) s += u(i, k) * d[k] * v(j, k);
            out(i, j) = s;
        }
    return out;
}

// Closed-form eigenvalues of a symmetric 2x2 matrix, ascending.
inline std::pair<double, double> eig2(double a, double b, double d) {
    const double m = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), b);
    return {m - r, m + r};
}

// Closed-form singular values of [[a, b], [c, d]], descending.
inline std::pair<double, double> svd2(double a, double b, double c, double d) {
    const double s1 = std::hypot(a + d, c - b);
    const double s2 = std::hypot(a - d, c + b);
    return {0.5 * (s1 + s2), 0.5 * std::abs(s1 - s2)};
}

// Functionals by direct summation.
inline double weak(const std::vector<double>& s) {
    double m = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) m = std::max(m, (1.0 + j) * s[j]);
    return m;
}

inline double omega_big(const std::vector<double>& s) {
    double best = 0.0, partial = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        partial += s[n];
        best = std::max(best, partial / std::log(2.0 + n));
    }
    return best;
}

inline double omega_small(const std::vector<double>& s) {
    double t = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) t += s[j] / (1.0 + j);
    return t;
}

inline double schatten(const std::vector<double>& s, double p) {
    double t = 0.0;
    for (double x : s) t += std::pow(x, p);
    return std::pow(t, 1.0 / p);
}

inline std::vector<double> random_spectrum(std::size_t len, std::mt19937_64& gen) {
    std::exponential_distribution<double> ed(1.0);
    std::vector<double> s(len);
    for (std::size_t j = 0; j < len; ++j) s[j] = ed(gen) / (1.0 + j);
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

}  // namespace oracle
