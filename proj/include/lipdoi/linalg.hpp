#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lipdoi/matrix.hpp"

namespace lipdoi {

inline constexpr double kDefaultTol = 1e-12;
inline constexpr int kMaxJacobiSweeps = 60;

// Eigenvalues (ascending) and an orthonormal eigenvector frame of a symmetric
// matrix. Column k of frame() is the eigenvector for eigenvalues()[k]. This is
// the finite-dimensional form of a spectral measure.
class SpectralDecomposition {
public:
    SpectralDecomposition() = default;
    SpectralDecomposition(std::vector<double> eigenvalues, Matrix frame);

    std::size_t dim() const noexcept { return eigenvalues_.size(); }
    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& frame() const noexcept { return frame_; }

    // frame * diag(values) * frame^T
    Matrix synthesize(std::span<const double> values) const;

private:
    std::vector<double> eigenvalues_;
    Matrix frame_;
};

// Nonincreasing, nonnegative sequence of singular values.
class SingularSpectrum {
public:
    SingularSpectrum() = default;
    // Requires values nonincreasing and nonnegative up to `slack`; entries are
    // then clamped so the invariant holds exactly.
    explicit SingularSpectrum(std::vector<double> values, double slack = 0.0);
    // Sorts descending and takes absolute values.
    static SingularSpectrum from_unsorted(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    // s_j with the convention s_j = 0 past the end.
    double at_or_zero(std::size_t j) const noexcept { return j < values_.size() ? values_[j] : 0.0; }
    std::span<const double> values() const noexcept { return values_; }

    SingularSpectrum scaled(double c) const;
    SingularSpectrum zero_padded(std::size_t extra) const;

private:
    std::vector<double> values_;
};

// Cyclic Jacobi rotations (one-sided, on A shifted to be positive
// semidefinite) until every pair of working columns is orthogonal to relative
// tolerance tol. Eigenvalues are the Rayleigh quotients of the final frame,
// sorted ascending with ties kept in original order. tol must lie in
// [1e-15, 1e-6]. Throws ConvergenceFailure after kMaxJacobiSweeps sweeps.
SpectralDecomposition eigh_symmetric(const SymmetricMatrix& a, double tol = kDefaultTol);

struct SvdResult {
    SingularSpectrum values;
    Matrix left;   // rows x k, orthonormal columns
    Matrix right;  // cols x k, orthonormal columns
};

// Thin SVD by one-sided (Hestenes) Jacobi, k = min(rows, cols).
SvdResult svd(const Matrix& m, double tol = kDefaultTol);
SingularSpectrum singular_values(const Matrix& m, double tol = kDefaultTol);

// Orthonormal basis of span(vectors) by modified Gram-Schmidt with one
// re-orthogonalization pass. A vector whose residual falls to rel_tol of its
// own norm is treated as dependent; zero vectors are skipped.
std::vector<std::vector<double>> orthonormal_basis(const std::vector<std::vector<double>>& vectors, std::size_t d,
                                                   double rel_tol = 1e-10);

// Orthogonal projector onto span(vectors)^perp in R^d.
Matrix complement_projector(const std::vector<std::vector<double>>& vectors, std::size_t d);

// Numerical rank: number of singular values above threshold * max(1, s_0).
std::size_t numerical_rank(const SingularSpectrum& s, double threshold);

}  // namespace lipdoi
