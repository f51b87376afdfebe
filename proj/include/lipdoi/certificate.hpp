#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lipdoi/calculus.hpp"
#include "lipdoi/linalg.hpp"

namespace lipdoi {

// Weak-type decay certificates for the kernel operator
//   (I_k g)(x) = sum_j phi(x) (f(x) - f(y_j)) / (x - y_j) psi(y_j) g(y_j) nu_j
// acting L^2(nu) -> L^2(mu) on finite atomic measures. The construction
// removes heavy atoms, partitions [-N, N] into at most n light intervals,
// splits the kernel into diagonal / upper / lower interval blocks and removes
// the first-order Taylor term of the off-diagonal blocks on a subspace of
// bounded codimension. What is left is an explicit residual E with
//   rank(M - E) <= k,   so   s_{k+n}(M) <= s_n(E) <= ||E||_{S_2} / sqrt(n + 1).

struct Atom {
    double position;
    double mass;
};

// Finite atomic measure with strictly increasing positions and positive masses.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::vector<Atom> atoms);

    std::size_t size() const noexcept { return atoms_.size(); }
    bool empty() const noexcept { return atoms_.empty(); }
    const Atom& operator[](std::size_t i) const noexcept { return atoms_[i]; }
    std::span<const Atom> atoms() const noexcept { return atoms_; }
    double total_mass() const noexcept;
    double max_abs_position() const noexcept;

private:
    std::vector<Atom> atoms_;
};

struct WeightedAtom {
    double position;
    double mass;
    double weight;
};

// weight^2 * mass: the share of ||phi||^2_{L^2(mu)} carried by one atom.
inline double atom_weight(double mass, double weight) noexcept { return weight * weight * mass; }

class WeightedKernelOperator {
public:
    WeightedKernelOperator(DiscreteMeasure mu, std::vector<double> phi, DiscreteMeasure nu, std::vector<double> psi,
                           LipschitzFunction f);
    // Sorts each side by position; duplicate positions within a side are
    // rejected.
    static WeightedKernelOperator from_atoms(std::vector<WeightedAtom> x_side, std::vector<WeightedAtom> y_side,
                                             LipschitzFunction f);

    const DiscreteMeasure& mu() const noexcept { return mu_; }
    const DiscreteMeasure& nu() const noexcept { return nu_; }
    std::span<const double> phi() const noexcept { return phi_; }
    std::span<const double> psi() const noexcept { return psi_; }
    const LipschitzFunction& f() const noexcept { return f_; }

    std::size_t rows() const noexcept { return mu_.size(); }
    std::size_t cols() const noexcept { return nu_.size(); }

    double phi_norm() const;
    double psi_norm() const;
    // sqrt(mu_i) phi_i and sqrt(nu_j) psi_j: coordinates of phi and psi in
    // the orthonormal atom bases.
    std::vector<double> row_amplitudes() const;
    std::vector<double> col_amplitudes() const;
    std::vector<double> row_atom_weights() const;
    std::vector<double> col_atom_weights() const;

    WeightedKernelOperator with_weights(std::vector<double> phi, std::vector<double> psi) const;
    WeightedKernelOperator with_function(LipschitzFunction f) const;

private:
    DiscreteMeasure mu_;
    std::vector<double> phi_;
    DiscreteMeasure nu_;
    std::vector<double> psi_;
    LipschitzFunction f_;
};

// Matrix of I_k between the orthonormal atom bases:
//   M(i, j) = sqrt(mu_i) phi_i dd(f; x_i, y_j) psi_j sqrt(nu_j).
Matrix materialize(const WeightedKernelOperator& kop);

struct Normalized {
    WeightedKernelOperator op;
    double phi_scale;  // original ||phi||
    double psi_scale;  // original ||psi||
    double lip_scale;  // original lip, or 1 when lip = 0
    // materialize(original) = total() * materialize(op)
    double total() const noexcept { return phi_scale * psi_scale * lip_scale; }
};

// Scales phi, psi to unit L^2 norm and f to lip 1 (a lip-0 function is left
// unchanged). Throws InvalidInput if phi or psi is zero.
Normalized normalize(const WeightedKernelOperator& kop);

enum class TruncationMode {
    Exact,     // N = max |position|; the discarded tail is exactly zero
    Doubling,  // smallest N from a doubling search with tail < n^{-1/2}
};

struct Truncation {
    double radius;
    double tail_hs;
};

// HS norm of the entries with |x_i| > radius or |y_j| > radius.
double truncation_tail(const WeightedKernelOperator& kop, double radius);
Truncation truncation_radius(const WeightedKernelOperator& kop, std::size_t n,
                             TruncationMode mode = TruncationMode::Exact);

// Indices of atoms with weight^2 * mass >= 1/n.
std::vector<std::size_t> heavy_atoms(const DiscreteMeasure& measure, std::span<const double> weights, std::size_t n);

// Zeroes the weights of the listed atoms and of every atom outside
// [-radius, radius].
WeightedKernelOperator mask(const WeightedKernelOperator& kop, std::span<const std::size_t> heavy_x,
                            std::span<const std::size_t> heavy_y,
                            double radius = std::numeric_limits<double>::infinity());

// Half-open [lo, hi); the last interval of a partition is closed.
struct Interval {
    double lo;
    double hi;
    bool closed_right;
    double phi_weight;
    double psi_weight;

    double length() const noexcept { return hi - lo; }
    double center() const noexcept { return 0.5 * (lo + hi); }
    double combined_weight() const noexcept { return phi_weight + psi_weight; }
    bool contains(double x) const noexcept { return x >= lo && (x < hi || (closed_right && x == hi)); }
};

double interval_distance(const Interval& a, const Interval& b) noexcept;

class IntervalPartition {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    IntervalPartition() = default;
    IntervalPartition(std::vector<Interval> intervals, double radius);

    std::size_t size() const noexcept { return intervals_.size(); }
    const Interval& operator[](std::size_t k) const noexcept { return intervals_[k]; }
    std::span<const Interval> intervals() const noexcept { return intervals_; }
    double radius() const noexcept { return radius_; }
    // Index of the interval containing x, or npos outside [-radius, radius].
    std::size_t locate(double x) const noexcept;

private:
    std::vector<Interval> intervals_;
    double radius_ = 0.0;
};

// Greedy left-to-right sweep over the atoms in [-radius, radius]: an interval
// is closed just before the next atom would push its combined weight above
// 4/n, with the cut at the midpoint between neighbouring atoms. Throws
// PreconditionViolation if some atom still has single-side weight >= 1/n.
IntervalPartition partition(const WeightedKernelOperator& masked, std::size_t n, double radius);

struct BlockPairs {
    std::vector<std::pair<std::size_t, std::size_t>> diag;
    std::vector<std::pair<std::size_t, std::size_t>> upper;  // I != J, |I| >= |J|
    std::vector<std::pair<std::size_t, std::size_t>> lower;  // |I| < |J|
};

// Pair (I, J) = (row interval, column interval) belongs to the upper family.
bool is_upper_pair(const Interval& i, const Interval& j) noexcept;
BlockPairs split_blocks(const IntervalPartition& part);

struct DiagBlockReport {
    double hs;            // exact HS norm of the I x I blocks
    double block_bound;   // 4 / sqrt(n)
    double weight_bound;  // sqrt(sum_I phi_weight(I) psi_weight(I)) <= 2 / sqrt(n)
};

DiagBlockReport diag_block_hs(const WeightedKernelOperator& masked, const IntervalPartition& part, std::size_t n);

enum class DefectSide { Column, Row };

struct DefectVector {
    DefectSide side;
    std::size_t interval;
    bool times_f;  // false: weight * chi_I;  true: weight * f * chi_I
    std::vector<double> coords;
};

// Column side: for each interval J, the coordinates of psi chi_J and
// psi f chi_J in the orthonormal basis of L^2(nu). Row side mirrors this with
// phi on L^2(mu). Zero vectors are dropped.
std::vector<DefectVector> taylor_defects(const IntervalPartition& part, const WeightedKernelOperator& masked,
                                         DefectSide side);

// For each J: sum over I != J with |I| >= |J| of |J|^2 / (|J| + dist(I, J))^2.
std::vector<double> separation_sums(const IntervalPartition& part);
// Mirror for the lower family: for each I, sum over J with |J| > |I| of
// |I|^2 / (|I| + dist(I, J))^2.
std::vector<double> lower_separation_sums(const IntervalPartition& part);

// Uniform bound on the per-pair sums above, from
// dist(I_k, J) >= (k - 3)/2 |J|:  2 + 4 (pi^2/6 - 1) < 5.
inline constexpr double kSeparationConstant = 5.0;

struct FlatBound {
    // sqrt((16/n^2) * sum over pairs of (|J| / (|J| + dist))^2): each of the
    // two interval weights in a pair is at most 4/n.
    double upper;
    double lower;
    // sqrt(sum over pairs of phi_weight(I) psi_weight(J) (|J| / (|J| + dist))^2)
    double upper_weighted;
    double lower_weighted;
};

FlatBound flat_bound(const IntervalPartition& part, std::size_t n);

struct CertificateOptions {
    TruncationMode truncation = TruncationMode::Exact;
    bool keep_defect_vectors = false;
    bool keep_residual_matrix = false;
};

struct WeakDecayCertificate {
    std::size_t n = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    // materialize(kop) = scale * (normalized matrix); bounds below are in
    // normalized units.
    double scale = 1.0;
    double truncation_radius = 0.0;
    double truncation_tail_hs = 0.0;
    std::vector<std::size_t> heavy_x;
    std::vector<std::size_t> heavy_y;
    IntervalPartition partition;
    std::vector<DefectVector> defect_vectors;  // only with keep_defect_vectors
    std::size_t column_defect_rank = 0;
    std::size_t row_defect_rank = 0;
    // rank(M - E) <= low_rank = |heavy_x| + |heavy_y| + column + row defect ranks
    std::size_t low_rank = 0;
    // r = low_rank + n; certifies s_r(M) <= empirical_bound.
    std::size_t defect_rank = 0;
    double residual_hs = 0.0;
    double diag_hs = 0.0;
    double upper_hs = 0.0;
    double lower_hs = 0.0;
    DiagBlockReport diag;
    FlatBound flat{};
    double empirical_bound = 0.0;  // residual_hs / sqrt(n + 1)
    double analytic_hs = 0.0;
    double analytic_bound = 0.0;  // analytic_hs / sqrt(n + 1)
    // Certified bound on max_j (1 + j) s_j(M) from s_j <= ||M||_{S_2} <= 1 and
    // s_{k + l}(M) <= ||E||_{S_2} / sqrt(l + 1).
    double weak_constant = 0.0;
    std::optional<Matrix> residual;  // E, only with keep_residual_matrix
};

WeakDecayCertificate build_certificate(const WeightedKernelOperator& kop, std::size_t n,
                                       const CertificateOptions& options = {});

struct VerificationReport {
    std::size_t r = 0;
    double s_r = 0.0;        // s_r(M) / scale
    double bound = 0.0;      // certificate b
    double weak_norm = 0.0;  // weak quasinorm of M / scale
    double weak_bound = 0.0;
    double analytic_bound = 0.0;
    bool decay_ok = false;     // s_r <= b + 1e-9
    bool analytic_ok = false;  // b <= analytic + 1e-9
    bool weak_ok = false;      // weak_norm <= weak_constant (+ 1e-9)
    bool sound() const noexcept { return decay_ok && analytic_ok && weak_ok; }
};

// Checks against a precomputed spectrum of materialize(kop) (original units).
VerificationReport check_certificate(const SingularSpectrum& spectrum, const WeakDecayCertificate& cert);
// Full SVD of materialize(kop); throws CertificateUnsound on any failed check.
VerificationReport verify_certificate(const WeightedKernelOperator& kop, const WeakDecayCertificate& cert);
VerificationReport verify_certificate(const SingularSpectrum& spectrum, const WeakDecayCertificate& cert);

// Measure file: optional "FUNCTION <spec>" line, then sections headed "MU"
// and "NU" with lines "position mass weight". '#' starts a comment line.
struct MeasureInput {
    std::vector<WeightedAtom> mu;
    std::vector<WeightedAtom> nu;
    std::optional<std::string> function_spec;
};

MeasureInput read_measure(std::istream& in);
MeasureInput read_measure_file(const std::string& path);
void write_measure(std::ostream& out, const WeightedKernelOperator& kop, const std::string& function_spec);

void write_certificate(std::ostream& out, const WeakDecayCertificate& cert, bool with_defects = false);
void write_verification(std::ostream& out, const VerificationReport& report);

}  // namespace lipdoi
