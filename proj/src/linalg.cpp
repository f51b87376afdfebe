#include "lipdoi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lipdoi/error.hpp"

namespace lipdoi {

SpectralDecomposition::SpectralDecomposition(std::vector<double> eigenvalues, Matrix frame)
    : eigenvalues_(std::move(eigenvalues)), frame_(std::move(frame)) {
    if (frame_.rows() != eigenvalues_.size() || frame_.cols() != eigenvalues_.size()) {
        throw InvalidInput("spectral decomposition: frame must be square of size dim");
    }
}

Matrix SpectralDecomposition::synthesize(std::span<const double> values) const {
    const std::size_t n = dim();
    if (values.size() != n) throw InvalidInput("synthesize: value count differs from dim");
    Matrix scaled = frame_;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = scaled.row(i);
        for (std::size_t k = 0; k < n; ++k) r[k] *= values[k];
    }
    Matrix out = matmul_nt(scaled, frame_);
    // exact symmetry
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

SingularSpectrum::SingularSpectrum(std::vector<double> values, double slack) : values_(std::move(values)) {
    for (std::size_t j = 0; j < values_.size(); ++j) {
        double& v = values_[j];
        if (!std::isfinite(v)) throw InvalidInput("singular spectrum: non-finite value at index " + std::to_string(j));
        if (v < -slack) throw InvalidInput("singular spectrum: negative value at index " + std::to_string(j));
        v = std::max(v, 0.0);
        if (j > 0) {
            const double prev = values_[j - 1];
            if (v > prev + slack) {
                throw InvalidInput("singular spectrum: not nonincreasing at index " + std::to_string(j));
            }
            v = std::min(v, prev);
        }
    }
}

SingularSpectrum SingularSpectrum::from_unsorted(std::vector<double> values) {
    for (double& v : values) v = std::abs(v);
    std::sort(values.begin(), values.end(), std::greater<>());
    return SingularSpectrum(std::move(values));
}

SingularSpectrum SingularSpectrum::scaled(double c) const {
    if (c < 0.0) throw InvalidParameter("spectrum scale must be nonnegative");
    std::vector<double> v = values_;
    for (double& x : v) x *= c;
    return SingularSpectrum(std::move(v));
}

SingularSpectrum SingularSpectrum::zero_padded(std::size_t extra) const {
    std::vector<double> v = values_;
    v.resize(v.size() + extra, 0.0);
    return SingularSpectrum(std::move(v));
}

namespace {

void check_tol(double tol) {
    if (!(tol >= 1e-15 && tol <= 1e-6)) throw InvalidParameter("tolerance must lie in [1e-15, 1e-6]");
}

// Columns below this fraction of ||M||_F are numerically zero: rotating them
// against the rest cannot move any singular value by more than rounding.
constexpr double kNegligibleColumn = 1e-15;

// One-sided Jacobi on the rows of g (each row is a column of the original
// matrix). Rotations are mirrored onto the rows of vt when given. Pairs in
// which one row has squared norm <= negligible are left alone.
void hestenes_orthogonalize(Matrix& g, Matrix* vt, double tol, double negligible) {
    const std::size_t k = g.rows();
    const std::size_t m = g.cols();
    if (k < 2) return;
    std::vector<double> sq(k);
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        for (std::size_t p = 0; p < k; ++p) sq[p] = dot(g.row(p), g.row(p));
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                const double alpha = sq[p];
                const double beta = sq[q];
                if (alpha <= negligible || beta <= negligible) continue;
                auto gp = g.row(p);
                auto gq = g.row(q);
                const double gamma = dot(gp, gq);
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                ++rotations;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = gp[i];
                    const double y = gq[i];
                    gp[i] = c * x - s * y;
                    gq[i] = s * x + c * y;
                }
                sq[p] = alpha - t * gamma;
                sq[q] = beta + t * gamma;
                if (vt != nullptr) {
                    auto vp = vt->row(p);
                    auto vq = vt->row(q);
                    for (std::size_t i = 0; i < vp.size(); ++i) {
                        const double x = vp[i];
                        const double y = vq[i];
                        vp[i] = c * x - s * y;
                        vq[i] = s * x + c * y;
                    }
                }
            }
        }
        if (rotations == 0) return;
    }
    throw ConvergenceFailure("one-sided Jacobi SVD did not converge within " + std::to_string(kMaxJacobiSweeps) +
                             " sweeps");
}

double negligible_square(const Matrix& g) {
    const double f = kNegligibleColumn * frobenius_norm(g);
    return f * f;
}

void check_svd_input(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("svd: empty matrix");
    if (!m.all_finite()) throw InvalidInput("svd: non-finite entries");
}

// Fills the columns of `u` (m x k) flagged in `missing` with unit vectors
// orthogonal to all other columns.
void complete_orthonormal_columns(Matrix& u, const std::vector<bool>& missing) {
    const std::size_t m = u.rows();
    const std::size_t k = u.cols();
    std::vector<std::vector<double>> basis;
    for (std::size_t c = 0; c < k; ++c)
        if (!missing[c]) basis.push_back(u.column(c));
    std::size_t next_coord = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (!missing[c]) continue;
        while (next_coord < m) {
            std::vector<double> v(m, 0.0);
            v[next_coord++] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : basis) {
                    const double proj = dot(v, b);
                    for (std::size_t i = 0; i < m; ++i) v[i] -= proj * b[i];
                }
            const double nv = norm2(v);
            if (nv > 1e-8) {
                for (double& x : v) x /= nv;
                for (std::size_t i = 0; i < m; ++i) u(i, c) = v[i];
                basis.push_back(std::move(v));
                break;
            }
        }
    }
}

}  // namespace

SpectralDecomposition eigh_symmetric(const SymmetricMatrix& a, double tol) {
    check_tol(tol);
    const std::size_t n = a.dim();
    if (n == 0) throw InvalidInput("eigh_symmetric: empty matrix");

    // Shift by a Gershgorin bound so B = A + shift*I is positive
    // semidefinite. One-sided rotations then orthogonalize the columns of
    // B V, and the rotation product V is an eigenvector frame of A. All
    // memory traffic is row-contiguous.
    double radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        for (double x : a.matrix().row(i)) r += std::abs(x);
        radius = std::max(radius, r);
    }
    Matrix vt = Matrix::identity(n);
    if (radius > 0.0) {
        const double shift = 1.01 * radius;
        Matrix g = a.matrix();
        for (std::size_t i = 0; i < n; ++i) g(i, i) += shift;
        // Off-diagonal mass of V^T A V scales like the pairwise threshold
        // times ||B||, so the threshold is tightened below tol.
        hestenes_orthogonalize(g, &vt, std::max(1e-15, 1e-2 * tol), 0.0);
    }

    // Rayleigh quotients v^T A v.
    const Matrix av = matmul_nt(vt, a.matrix());
    std::vector<double> rayleigh(n);
    for (std::size_t k = 0; k < n; ++k) rayleigh[k] = dot(av.row(k), vt.row(k));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return rayleigh[i] < rayleigh[j]; });

    std::vector<double> values(n);
    Matrix frame(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = rayleigh[order[k]];
        auto v = vt.row(order[k]);
        for (std::size_t i = 0; i < n; ++i) frame(i, k) = v[i];
    }
    return SpectralDecomposition(std::move(values), std::move(frame));
}

SvdResult svd(const Matrix& m, double tol) {
    check_tol(tol);
    check_svd_input(m);
    // Orthogonalize the columns of whichever of M, M^T has fewer columns.
    const bool transpose = m.cols() > m.rows();
    Matrix g = transpose ? m : m.transposed();  // rows of g = columns of the working matrix
    const std::size_t k = g.rows();
    const std::size_t len = g.cols();
    Matrix vt = Matrix::identity(k);
    const double negligible = negligible_square(g);
    hestenes_orthogonalize(g, &vt, tol, negligible);

    std::vector<double> norms(k);
    for (std::size_t c = 0; c < k; ++c) norms[c] = norm2(g.row(c));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    const double smax = norms[order[0]];
    std::vector<double> values(k);
    Matrix long_side(len, k);
    Matrix short_side(k, k);
    std::vector<bool> missing(k, false);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t src = order[c];
        values[c] = norms[src];
        auto gr = g.row(src);
        if (norms[src] > 0.0 && norms[src] * norms[src] > negligible && norms[src] > smax * 1e-300) {
            for (std::size_t i = 0; i < len; ++i) long_side(i, c) = gr[i] / norms[src];
        } else {
            missing[c] = true;
        }
        auto vr = vt.row(src);
        for (std::size_t i = 0; i < k; ++i) short_side(i, c) = vr[i];
    }
    complete_orthonormal_columns(long_side, missing);

    SvdResult out{SingularSpectrum(std::move(values)), Matrix{}, Matrix{}};
    if (transpose) {
        // M^T = long_side * S * short_side^T  =>  M = short_side * S * long_side^T
        out.left = std::move(short_side);
        out.right = std::move(long_side);
    } else {
        out.left = std::move(long_side);
        out.right = std::move(short_side);
    }
    return out;
}

SingularSpectrum singular_values(const Matrix& m, double tol) {
    check_tol(tol);
    check_svd_input(m);
    Matrix g = m.cols() > m.rows() ? m : m.transposed();
    hestenes_orthogonalize(g, nullptr, tol, negligible_square(g));
    std::vector<double> values(g.rows());
    for (std::size_t c = 0; c < g.rows(); ++c) values[c] = norm2(g.row(c));
    return SingularSpectrum::from_unsorted(std::move(values));
}

std::vector<std::vector<double>> orthonormal_basis(const std::vector<std::vector<double>>& vectors, std::size_t d,
                                                   double rel_tol) {
    std::vector<std::vector<double>> basis;
    for (const auto& v0 : vectors) {
        if (v0.size() != d) throw InvalidInput("orthonormal_basis: vector length differs from d");
        const double n0 = norm2(v0);
        if (n0 == 0.0) continue;
        std::vector<double> v = v0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                const double proj = dot(v, b);
                for (std::size_t i = 0; i < d; ++i) v[i] -= proj * b[i];
            }
        }
        const double nv = norm2(v);
        if (nv <= rel_tol * n0) continue;
        for (double& x : v) x /= nv;
        basis.push_back(std::move(v));
        if (basis.size() == d) break;
    }
    return basis;
}

Matrix complement_projector(const std::vector<std::vector<double>>& vectors, std::size_t d) {
    const auto basis = orthonormal_basis(vectors, d);
    Matrix p = Matrix::identity(d);
    for (const auto& b : basis)
        for (std::size_t i = 0; i < d; ++i) {
            auto r = p.row(i);
            for (std::size_t j = 0; j < d; ++j) r[j] -= b[i] * b[j];
        }
    // exact symmetry
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = 0.5 * (p(i, j) + p(j, i));
            p(i, j) = v;
            p(j, i) = v;
        }
    return p;
}

std::size_t numerical_rank(const SingularSpectrum& s, double threshold) {
    if (s.empty()) return 0;
    const double cut = threshold * std::max(1.0, s[0]);
    std::size_t r = 0;
    while (r < s.size() && s[r] > cut) ++r;
    return r;
}

}  // namespace lipdoi
