#include "lipdoi/doi.hpp"

#include <cmath>
#include <string>

#include "lipdoi/error.hpp"

namespace lipdoi {

Matrix doi_core(const LipschitzFunction& f, const SpectralDecomposition& d1, const SpectralDecomposition& d2,
                const Matrix& t) {
    if (t.rows() != d1.dim() || t.cols() != d2.dim()) {
        throw InvalidInput("doi: T is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                           " but the spectral decompositions have dims " + std::to_string(d1.dim()) + " and " +
                           std::to_string(d2.dim()));
    }
    if (!t.all_finite()) throw InvalidInput("doi: T has non-finite entries");
    const Matrix l = loewner_matrix(f, d1.eigenvalues(), d2.eigenvalues());
    Matrix core = matmul(matmul_tn(d1.frame(), t), d2.frame());
    return hadamard(core, l);
}

Matrix doi_apply(const LipschitzFunction& f, const SpectralDecomposition& d1, const SpectralDecomposition& d2,
                 const Matrix& t) {
    const Matrix core = doi_core(f, d1, d2, t);
    return matmul_nt(matmul(d1.frame(), core), d2.frame());
}

Matrix f_delta(const LipschitzFunction& f, const SpectralDecomposition& da, const SpectralDecomposition& db) {
    if (da.dim() != db.dim()) throw InvalidInput("f_delta: A and B differ in dimension");
    return apply_function(f, da).matrix() - apply_function(f, db).matrix();
}

Matrix f_delta(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("f_delta: A and B differ in dimension");
    return f_delta(f, eigh_symmetric(a), eigh_symmetric(b));
}

double check_birman_solomyak(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b,
                             const SpectralDecomposition& da, const SpectralDecomposition& db) {
    if (a.dim() != b.dim()) throw InvalidInput("check_birman_solomyak: A and B differ in dimension");
    Matrix lhs = f_delta(f, da, db);
    lhs -= doi_apply(f, da, db, a.matrix() - b.matrix());
    return frobenius_norm(lhs);
}

double check_birman_solomyak(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("check_birman_solomyak: A and B differ in dimension");
    return check_birman_solomyak(f, a, b, eigh_symmetric(a), eigh_symmetric(b));
}

double birman_solomyak_tolerance(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return 1e-8 * (1.0 + frobenius_norm(a.matrix()) + frobenius_norm(b.matrix())) * f.lip();
}

SymmetricMatrix rank_one_perturb(const SymmetricMatrix& a, std::span<const double> u, double c) {
    if (u.size() != a.dim()) throw InvalidInput("rank_one_perturb: |u| differs from dim");
    if (norm2(u) == 0.0) throw InvalidInput("rank_one_perturb: u must be nonzero");
    if (!std::isfinite(c)) throw InvalidInput("rank_one_perturb: c must be finite");
    Matrix m = a.matrix();
    for (std::size_t i = 0; i < u.size(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < u.size(); ++j) r[j] += c * u[i] * u[j];
    }
    return SymmetricMatrix(m);
}

}  // namespace lipdoi
