#pragma once

#include <span>

#include "lipdoi/calculus.hpp"
#include "lipdoi/linalg.hpp"

namespace lipdoi {

// Finite-dimensional double operator integral with divided-difference symbol:
//   U (L o (U^T T V)) V^T,   L = loewner_matrix(f, lambda(d1), lambda(d2)),
// where U, V are the frames of d1, d2. T may be any d1.dim() x d2.dim() matrix.
Matrix doi_apply(const LipschitzFunction& f, const SpectralDecomposition& d1, const SpectralDecomposition& d2,
                 const Matrix& t);

// The Schur-multiplied core L o (U^T T V). It has the same singular values as
// doi_apply(f, d1, d2, t), and skips the two outer products.
Matrix doi_core(const LipschitzFunction& f, const SpectralDecomposition& d1, const SpectralDecomposition& d2,
                const Matrix& t);

// f(A) - f(B)
Matrix f_delta(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b);
Matrix f_delta(const LipschitzFunction& f, const SpectralDecomposition& da, const SpectralDecomposition& db);

// ||(f(A) - f(B)) - doi_apply(f, eigh(A), eigh(B), A - B)||_F.
double check_birman_solomyak(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b);
// Same with decompositions already at hand.
double check_birman_solomyak(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b,
                             const SpectralDecomposition& da, const SpectralDecomposition& db);
// Contract for the residual: 1e-8 * (1 + ||A||_F + ||B||_F) * lip.
double birman_solomyak_tolerance(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b);

// A + c u u^T. Throws InvalidInput if u is zero or has the wrong length.
SymmetricMatrix rank_one_perturb(const SymmetricMatrix& a, std::span<const double> u, double c);

}  // namespace lipdoi
