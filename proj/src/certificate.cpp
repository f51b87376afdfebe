#include "lipdoi/certificate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "lipdoi/error.hpp"
#include "lipdoi/ideals.hpp"
#include "lipdoi/text_format.hpp"

namespace lipdoi {

// ---------------------------------------------------------------------------
// Measures and operators

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const Atom& a = atoms_[i];
        if (!std::isfinite(a.position)) throw InvalidInput("measure: non-finite atom position");
        if (!(a.mass > 0.0) || !std::isfinite(a.mass)) {
            throw InvalidInput("measure: atom masses must be positive and finite");
        }
        if (i > 0 && !(atoms_[i - 1].position < a.position)) {
            throw InvalidInput("measure: atom positions must be strictly increasing");
        }
    }
}

double DiscreteMeasure::total_mass() const noexcept {
    double s = 0.0;
    for (const Atom& a : atoms_) s += a.mass;
    return s;
}

double DiscreteMeasure::max_abs_position() const noexcept {
    double m = 0.0;
    for (const Atom& a : atoms_) m = std::max(m, std::abs(a.position));
    return m;
}

WeightedKernelOperator::WeightedKernelOperator(DiscreteMeasure mu, std::vector<double> phi, DiscreteMeasure nu,
                                               std::vector<double> psi, LipschitzFunction f)
    : mu_(std::move(mu)), phi_(std::move(phi)), nu_(std::move(nu)), psi_(std::move(psi)), f_(std::move(f)) {
    if (phi_.size() != mu_.size()) throw InvalidInput("kernel operator: phi length differs from mu atom count");
    if (psi_.size() != nu_.size()) throw InvalidInput("kernel operator: psi length differs from nu atom count");
    for (double w : phi_)
        if (!std::isfinite(w)) throw InvalidInput("kernel operator: non-finite phi weight");
    for (double w : psi_)
        if (!std::isfinite(w)) throw InvalidInput("kernel operator: non-finite psi weight");
}

WeightedKernelOperator WeightedKernelOperator::from_atoms(std::vector<WeightedAtom> x_side,
                                                          std::vector<WeightedAtom> y_side, LipschitzFunction f) {
    auto split = [](std::vector<WeightedAtom>& side, const char* name) {
        std::stable_sort(side.begin(), side.end(),
                         [](const WeightedAtom& a, const WeightedAtom& b) { return a.position < b.position; });
        std::vector<Atom> atoms;
        std::vector<double> weights;
        for (std::size_t i = 0; i < side.size(); ++i) {
            if (i > 0 && side[i].position == side[i - 1].position) {
                throw InvalidInput(std::string("kernel operator: duplicate ") + name + " atom position " +
                                   std::to_string(side[i].position));
            }
            atoms.push_back({side[i].position, side[i].mass});
            weights.push_back(side[i].weight);
        }
        return std::pair{DiscreteMeasure(std::move(atoms)), std::move(weights)};
    };
    auto [mu, phi] = split(x_side, "mu");
    auto [nu, psi] = split(y_side, "nu");
    return WeightedKernelOperator(std::move(mu), std::move(phi), std::move(nu), std::move(psi), std::move(f));
}

double WeightedKernelOperator::phi_norm() const { return norm2(row_amplitudes()); }
double WeightedKernelOperator::psi_norm() const { return norm2(col_amplitudes()); }

std::vector<double> WeightedKernelOperator::row_amplitudes() const {
    std::vector<double> a(rows());
    for (std::size_t i = 0; i < rows(); ++i) a[i] = std::sqrt(mu_[i].mass) * phi_[i];
    return a;
}

std::vector<double> WeightedKernelOperator::col_amplitudes() const {
    std::vector<double> b(cols());
    for (std::size_t j = 0; j < cols(); ++j) b[j] = std::sqrt(nu_[j].mass) * psi_[j];
    return b;
}

std::vector<double> WeightedKernelOperator::row_atom_weights() const {
    std::vector<double> w(rows());
    for (std::size_t i = 0; i < rows(); ++i) w[i] = atom_weight(mu_[i].mass, phi_[i]);
    return w;
}

std::vector<double> WeightedKernelOperator::col_atom_weights() const {
    std::vector<double> w(cols());
    for (std::size_t j = 0; j < cols(); ++j) w[j] = atom_weight(nu_[j].mass, psi_[j]);
    return w;
}

WeightedKernelOperator WeightedKernelOperator::with_weights(std::vector<double> phi, std::vector<double> psi) const {
    return WeightedKernelOperator(mu_, std::move(phi), nu_, std::move(psi), f_);
}

WeightedKernelOperator WeightedKernelOperator::with_function(LipschitzFunction f) const {
    return WeightedKernelOperator(mu_, phi_, nu_, psi_, std::move(f));
}

namespace {

std::vector<double> evaluate(const LipschitzFunction& f, const DiscreteMeasure& m) {
    std::vector<double> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        v[i] = f(m[i].position);
        if (!std::isfinite(v[i])) {
            throw EvaluationError("function '" + f.name() + "' is not finite at atom " + std::to_string(m[i].position));
        }
    }
    return v;
}

void require_n(std::size_t n) {
    if (n == 0) throw InvalidParameter("n must be a positive count");
}

}  // namespace

Matrix materialize(const WeightedKernelOperator& kop) {
    const auto a = kop.row_amplitudes();
    const auto b = kop.col_amplitudes();
    const auto fx = evaluate(kop.f(), kop.mu());
    const auto fy = evaluate(kop.f(), kop.nu());
    const double lip = kop.f().lip();
    Matrix m(kop.rows(), kop.cols());
    for (std::size_t i = 0; i < kop.rows(); ++i) {
        const double x = kop.mu()[i].position;
        auto row = m.row(i);
        for (std::size_t j = 0; j < kop.cols(); ++j) {
            row[j] = a[i] * divided_difference(fx[i], fy[j], x, kop.nu()[j].position, lip) * b[j];
        }
    }
    return m;
}

Normalized normalize(const WeightedKernelOperator& kop) {
    const double pn = kop.phi_norm();
    const double qn = kop.psi_norm();
    if (pn == 0.0) throw InvalidInput("normalize: phi is zero in L^2(mu)");
    if (qn == 0.0) throw InvalidInput("normalize: psi is zero in L^2(nu)");
    std::vector<double> phi(kop.phi().begin(), kop.phi().end());
    std::vector<double> psi(kop.psi().begin(), kop.psi().end());
    for (double& w : phi) w /= pn;
    for (double& w : psi) w /= qn;

    const LipschitzFunction& f = kop.f();
    const double lip = f.lip();
    if (lip == 0.0) {
        return {kop.with_weights(std::move(phi), std::move(psi)), pn, qn, 1.0};
    }
    LipschitzFunction unit(f.name(), [f, c = 1.0 / lip](double x) { return c * f(x); }, 1.0);
    return {WeightedKernelOperator(kop.mu(), std::move(phi), kop.nu(), std::move(psi), std::move(unit)), pn, qn, lip};
}

// ---------------------------------------------------------------------------
// Truncation, heavy atoms, masking

double truncation_tail(const WeightedKernelOperator& kop, double radius) {
    const auto a = kop.row_amplitudes();
    const auto b = kop.col_amplitudes();
    const auto fx = evaluate(kop.f(), kop.mu());
    const auto fy = evaluate(kop.f(), kop.nu());
    const double lip = kop.f().lip();
    double sum = 0.0;
    for (std::size_t i = 0; i < kop.rows(); ++i) {
        const double x = kop.mu()[i].position;
        const bool row_out = std::abs(x) > radius;
        for (std::size_t j = 0; j < kop.cols(); ++j) {
            const double y = kop.nu()[j].position;
            if (!row_out && std::abs(y) <= radius) continue;
            const double e = a[i] * divided_difference(fx[i], fy[j], x, y, lip) * b[j];
            sum += e * e;
        }
    }
    return std::sqrt(sum);
}

Truncation truncation_radius(const WeightedKernelOperator& kop, std::size_t n, TruncationMode mode) {
    require_n(n);
    const double support = std::max(kop.mu().max_abs_position(), kop.nu().max_abs_position());
    // All atoms at the origin: any positive radius covers the support.
    const double full = support > 0.0 ? support : 1.0;
    if (mode == TruncationMode::Exact) return {full, 0.0};

    const double target = 1.0 / std::sqrt(static_cast<double>(n));
    double start = full;
    for (const auto* m : {&kop.mu(), &kop.nu()})
        for (const Atom& a : m->atoms())
            if (a.position != 0.0) start = std::min(start, std::abs(a.position));
    for (double radius = start; radius < full; radius *= 2.0) {
        const double tail = truncation_tail(kop, radius);
        if (tail < target) return {radius, tail};
    }
    return {full, 0.0};
}

std::vector<std::size_t> heavy_atoms(const DiscreteMeasure& measure, std::span<const double> weights, std::size_t n) {
    require_n(n);
    if (weights.size() != measure.size()) throw InvalidInput("heavy_atoms: weight count differs from atom count");
    const double threshold = 1.0 / static_cast<double>(n);
    std::vector<std::size_t> heavy;
    for (std::size_t i = 0; i < measure.size(); ++i) {
        if (atom_weight(measure[i].mass, weights[i]) >= threshold) heavy.push_back(i);
    }
    return heavy;
}

WeightedKernelOperator mask(const WeightedKernelOperator& kop, std::span<const std::size_t> heavy_x,
                            std::span<const std::size_t> heavy_y, double radius) {
    std::vector<double> phi(kop.phi().begin(), kop.phi().end());
    std::vector<double> psi(kop.psi().begin(), kop.psi().end());
    for (std::size_t i : heavy_x) {
        if (i >= phi.size()) throw InvalidInput("mask: heavy_x index out of range");
        phi[i] = 0.0;
    }
    for (std::size_t j : heavy_y) {
        if (j >= psi.size()) throw InvalidInput("mask: heavy_y index out of range");
        psi[j] = 0.0;
    }
    for (std::size_t i = 0; i < phi.size(); ++i)
        if (std::abs(kop.mu()[i].position) > radius) phi[i] = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j)
        if (std::abs(kop.nu()[j].position) > radius) psi[j] = 0.0;
    return kop.with_weights(std::move(phi), std::move(psi));
}

// ---------------------------------------------------------------------------
// Partition

double interval_distance(const Interval& a, const Interval& b) noexcept {
    if (a.hi <= b.lo) return b.lo - a.hi;
    if (b.hi <= a.lo) return a.lo - b.hi;
    return 0.0;
}

IntervalPartition::IntervalPartition(std::vector<Interval> intervals, double radius)
    : intervals_(std::move(intervals)), radius_(radius) {
    if (intervals_.empty()) throw InvalidInput("partition: no intervals");
    if (intervals_.front().lo != -radius || intervals_.back().hi != radius || !intervals_.back().closed_right) {
        throw InvalidInput("partition: intervals must cover [-radius, radius] with the last one closed");
    }
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        if (intervals_[k].hi < intervals_[k].lo) throw InvalidInput("partition: interval with hi < lo");
        if (k + 1 < intervals_.size() && intervals_[k].hi != intervals_[k + 1].lo) {
            throw InvalidInput("partition: intervals must be contiguous");
        }
    }
}

std::size_t IntervalPartition::locate(double x) const noexcept {
    if (intervals_.empty() || x < -radius_ || x > radius_) return npos;
    const auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                     [](double v, const Interval& iv) { return v < iv.lo; });
    if (it == intervals_.begin()) return npos;
    return static_cast<std::size_t>(it - intervals_.begin()) - 1;
}

IntervalPartition partition(const WeightedKernelOperator& masked, std::size_t n, double radius) {
    require_n(n);
    if (!(radius > 0.0)) throw InvalidParameter("partition: radius must be positive");
    const double light = 1.0 / static_cast<double>(n);
    const double cap = 4.0 / static_cast<double>(n);

    struct Unit {
        double position;
        double phi_weight;
        double psi_weight;
    };
    std::vector<Unit> units;
    const auto wx = masked.row_atom_weights();
    const auto wy = masked.col_atom_weights();
    for (std::size_t i = 0; i < masked.rows(); ++i) {
        const double x = masked.mu()[i].position;
        if (std::abs(x) > radius) continue;
        if (wx[i] >= light) {
            throw PreconditionViolation("partition: mu atom at " + std::to_string(x) +
                                        " has weight >= 1/n; heavy atoms must be masked first");
        }
        units.push_back({x, wx[i], 0.0});
    }
    for (std::size_t j = 0; j < masked.cols(); ++j) {
        const double y = masked.nu()[j].position;
        if (std::abs(y) > radius) continue;
        if (wy[j] >= light) {
            throw PreconditionViolation("partition: nu atom at " + std::to_string(y) +
                                        " has weight >= 1/n; heavy atoms must be masked first");
        }
        units.push_back({y, 0.0, wy[j]});
    }
    std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.position < b.position; });
    // an x-atom and a y-atom at the same position cannot be separated
    std::vector<Unit> merged;
    for (const Unit& u : units) {
        if (!merged.empty() && merged.back().position == u.position) {
            merged.back().phi_weight += u.phi_weight;
            merged.back().psi_weight += u.psi_weight;
        } else {
            merged.push_back(u);
        }
    }

    std::vector<Interval> out;
    Interval current{-radius, radius, false, 0.0, 0.0};
    bool has_atoms = false;
    double last_position = -radius;
    for (const Unit& u : merged) {
        const double w = u.phi_weight + u.psi_weight;
        if (has_atoms && current.combined_weight() + w > cap) {
            double cut = last_position + 0.5 * (u.position - last_position);
            if (!(cut > last_position)) cut = u.position;
            current.hi = cut;
            out.push_back(current);
            current = Interval{cut, radius, false, 0.0, 0.0};
        }
        current.phi_weight += u.phi_weight;
        current.psi_weight += u.psi_weight;
        has_atoms = true;
        last_position = u.position;
    }
    current.hi = radius;
    current.closed_right = true;
    out.push_back(current);
    return IntervalPartition(std::move(out), radius);
}

bool is_upper_pair(const Interval& i, const Interval& j) noexcept { return i.length() >= j.length(); }

BlockPairs split_blocks(const IntervalPartition& part) {
    BlockPairs pairs;
    for (std::size_t i = 0; i < part.size(); ++i) {
        for (std::size_t j = 0; j < part.size(); ++j) {
            if (i == j) {
                pairs.diag.emplace_back(i, j);
            } else if (is_upper_pair(part[i], part[j])) {
                pairs.upper.emplace_back(i, j);
            } else {
                pairs.lower.emplace_back(i, j);
            }
        }
    }
    return pairs;
}

DiagBlockReport diag_block_hs(const WeightedKernelOperator& masked, const IntervalPartition& part, std::size_t n) {
    require_n(n);
    const auto a = masked.row_amplitudes();
    const auto b = masked.col_amplitudes();
    const auto fx = evaluate(masked.f(), masked.mu());
    const auto fy = evaluate(masked.f(), masked.nu());
    const double lip = masked.f().lip();
    std::vector<std::size_t> col_interval(masked.cols());
    for (std::size_t j = 0; j < masked.cols(); ++j) col_interval[j] = part.locate(masked.nu()[j].position);

    double sum = 0.0;
    for (std::size_t i = 0; i < masked.rows(); ++i) {
        const double x = masked.mu()[i].position;
        const std::size_t ri = part.locate(x);
        if (ri == IntervalPartition::npos || a[i] == 0.0) continue;
        for (std::size_t j = 0; j < masked.cols(); ++j) {
            if (col_interval[j] != ri) continue;
            const double e = a[i] * divided_difference(fx[i], fy[j], x, masked.nu()[j].position, lip) * b[j];
            sum += e * e;
        }
    }
    double products = 0.0;
    for (const Interval& iv : part.intervals()) products += iv.phi_weight * iv.psi_weight;
    return {std::sqrt(sum), 4.0 / std::sqrt(static_cast<double>(n)), std::sqrt(products)};
}

std::vector<DefectVector> taylor_defects(const IntervalPartition& part, const WeightedKernelOperator& masked,
                                         DefectSide side) {
    const bool column = side == DefectSide::Column;
    const DiscreteMeasure& measure = column ? masked.nu() : masked.mu();
    const auto amp = column ? masked.col_amplitudes() : masked.row_amplitudes();
    const auto fv = evaluate(masked.f(), measure);

    std::vector<DefectVector> out;
    for (std::size_t k = 0; k < part.size(); ++k) {
        DefectVector plain{side, k, false, std::vector<double>(measure.size(), 0.0)};
        DefectVector with_f{side, k, true, std::vector<double>(measure.size(), 0.0)};
        bool plain_nonzero = false;
        bool f_nonzero = false;
        for (std::size_t i = 0; i < measure.size(); ++i) {
            if (amp[i] == 0.0 || part.locate(measure[i].position) != k) continue;
            plain.coords[i] = amp[i];
            with_f.coords[i] = amp[i] * fv[i];
            plain_nonzero = true;
            f_nonzero = f_nonzero || with_f.coords[i] != 0.0;
        }
        if (plain_nonzero) out.push_back(std::move(plain));
        if (f_nonzero) out.push_back(std::move(with_f));
    }
    return out;
}

namespace {

double decay_term(double length, double distance) noexcept {
    if (length == 0.0) return 0.0;
    const double q = length / (length + distance);
    return q * q;
}

}  // namespace

std::vector<double> separation_sums(const IntervalPartition& part) {
    std::vector<double> sums(part.size(), 0.0);
    for (std::size_t j = 0; j < part.size(); ++j)
        for (std::size_t i = 0; i < part.size(); ++i)
            if (i != j && is_upper_pair(part[i], part[j]))
                sums[j] += decay_term(part[j].length(), interval_distance(part[i], part[j]));
    return sums;
}

std::vector<double> lower_separation_sums(const IntervalPartition& part) {
    std::vector<double> sums(part.size(), 0.0);
    for (std::size_t i = 0; i < part.size(); ++i)
        for (std::size_t j = 0; j < part.size(); ++j)
            if (i != j && !is_upper_pair(part[i], part[j]))
                sums[i] += decay_term(part[i].length(), interval_distance(part[i], part[j]));
    return sums;
}

FlatBound flat_bound(const IntervalPartition& part, std::size_t n) {
    require_n(n);
    const double nn = static_cast<double>(n);
    const double uniform = 16.0 / (nn * nn);
    double up = 0.0, lo = 0.0, up_w = 0.0, lo_w = 0.0;
    for (std::size_t i = 0; i < part.size(); ++i) {
        for (std::size_t j = 0; j < part.size(); ++j) {
            if (i == j) continue;
            const double dist = interval_distance(part[i], part[j]);
            const double w = part[i].phi_weight * part[j].psi_weight;
            if (is_upper_pair(part[i], part[j])) {
                const double t = decay_term(part[j].length(), dist);
                up += t;
                up_w += w * t;
            } else {
                const double t = decay_term(part[i].length(), dist);
                lo += t;
                lo_w += w * t;
            }
        }
    }
    return {std::sqrt(uniform * up), std::sqrt(uniform * lo), std::sqrt(up_w), std::sqrt(lo_w)};
}

// ---------------------------------------------------------------------------
// Certificate

WeakDecayCertificate build_certificate(const WeightedKernelOperator& kop, std::size_t n,
                                       const CertificateOptions& options) {
    require_n(n);
    const Normalized nz = normalize(kop);
    const WeightedKernelOperator& op = nz.op;

    WeakDecayCertificate cert;
    cert.n = n;
    cert.rows = op.rows();
    cert.cols = op.cols();
    cert.scale = nz.total();

    const Truncation tr = truncation_radius(op, n, options.truncation);
    cert.truncation_radius = tr.radius;
    cert.truncation_tail_hs = tr.tail_hs;

    cert.heavy_x = heavy_atoms(op.mu(), op.phi(), n);
    cert.heavy_y = heavy_atoms(op.nu(), op.psi(), n);
    const WeightedKernelOperator masked = mask(op, cert.heavy_x, cert.heavy_y, tr.radius);
    cert.partition = partition(masked, n, tr.radius);
    const IntervalPartition& part = cert.partition;
    cert.diag = diag_block_hs(masked, part, n);
    cert.flat = flat_bound(part, n);

    auto column_defects = taylor_defects(part, masked, DefectSide::Column);
    auto row_defects = taylor_defects(part, masked, DefectSide::Row);
    auto coords_of = [](const std::vector<DefectVector>& defects) {
        std::vector<std::vector<double>> v;
        v.reserve(defects.size());
        for (const auto& d : defects) v.push_back(d.coords);
        return v;
    };
    cert.column_defect_rank = orthonormal_basis(coords_of(column_defects), op.cols()).size();
    cert.row_defect_rank = orthonormal_basis(coords_of(row_defects), op.rows()).size();
    cert.low_rank = cert.heavy_x.size() + cert.heavy_y.size() + cert.column_defect_rank + cert.row_defect_rank;
    cert.defect_rank = cert.low_rank + n;
    if (options.keep_defect_vectors) {
        cert.defect_vectors = std::move(column_defects);
        cert.defect_vectors.insert(cert.defect_vectors.end(), std::make_move_iterator(row_defects.begin()),
                                   std::make_move_iterator(row_defects.end()));
    }

    // Residual E = (M - M_N) + diagonal blocks + Taylor-corrected off-diagonal
    // blocks of the masked kernel. Everything dropped from M is either a
    // masked row/column or, within one interval pair, a combination of the
    // defect vectors on the short side.
    const auto a = op.row_amplitudes();
    const auto b = op.col_amplitudes();
    const auto am = masked.row_amplitudes();
    const auto bm = masked.col_amplitudes();
    const auto fx = evaluate(op.f(), op.mu());
    const auto fy = evaluate(op.f(), op.nu());
    const double lip = op.f().lip();
    std::vector<std::size_t> row_interval(op.rows()), col_interval(op.cols());
    for (std::size_t i = 0; i < op.rows(); ++i) row_interval[i] = part.locate(op.mu()[i].position);
    for (std::size_t j = 0; j < op.cols(); ++j) col_interval[j] = part.locate(op.nu()[j].position);

    if (options.keep_residual_matrix) cert.residual = Matrix(op.rows(), op.cols());
    double tail2 = 0.0, diag2 = 0.0, up2 = 0.0, lo2 = 0.0;
    for (std::size_t i = 0; i < op.rows(); ++i) {
        const double x = op.mu()[i].position;
        const std::size_t ri = row_interval[i];
        for (std::size_t j = 0; j < op.cols(); ++j) {
            const double y = op.nu()[j].position;
            const std::size_t cj = col_interval[j];
            const double dd = divided_difference(fx[i], fy[j], x, y, lip);
            double e = 0.0;
            if (ri == IntervalPartition::npos || cj == IntervalPartition::npos) {
                e = a[i] * dd * b[j];
                tail2 += e * e;
            } else if (am[i] != 0.0 && bm[j] != 0.0) {
                const double base = am[i] * dd * bm[j];
                if (ri == cj) {
                    e = base;
                    diag2 += e * e;
                } else if (is_upper_pair(part[ri], part[cj])) {
                    const double c = part[cj].center();
                    e = base * (y - c) / (x - c);
                    up2 += e * e;
                } else {
                    const double c = part[ri].center();
                    e = base * (x - c) / (y - c);
                    lo2 += e * e;
                }
            }
            if (cert.residual) (*cert.residual)(i, j) = e;
        }
    }
    cert.diag_hs = std::sqrt(diag2);
    cert.upper_hs = std::sqrt(up2);
    cert.lower_hs = std::sqrt(lo2);
    cert.residual_hs = std::sqrt(tail2 + diag2 + up2 + lo2);

    const double root = std::sqrt(static_cast<double>(n) + 1.0);
    cert.empirical_bound = cert.residual_hs / root;
    const double tail_term = tr.tail_hs > 0.0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 0.0;
    cert.analytic_hs = tail_term + cert.diag.block_bound + cert.flat.upper + cert.flat.lower;
    cert.analytic_bound = cert.analytic_hs / root;

    const double top = lip > 0.0 ? 1.0 : 0.0;
    const std::size_t len = std::min(op.rows(), op.cols());
    double weak = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
        double s = top;
        if (j >= cert.low_rank) {
            s = std::min(s, cert.residual_hs / std::sqrt(static_cast<double>(j - cert.low_rank + 1)));
        }
        weak = std::max(weak, static_cast<double>(j + 1) * s);
    }
    cert.weak_constant = weak;
    return cert;
}

VerificationReport check_certificate(const SingularSpectrum& spectrum, const WeakDecayCertificate& cert) {
    constexpr double slack = 1e-9;
    VerificationReport rep;
    rep.r = cert.defect_rank;
    const double scale = cert.scale > 0.0 ? cert.scale : 1.0;
    rep.s_r = spectrum.at_or_zero(cert.defect_rank) / scale;
    rep.bound = cert.empirical_bound;
    rep.analytic_bound = cert.analytic_bound;
    rep.weak_norm = weak_s1_quasinorm(spectrum) / scale;
    rep.weak_bound = cert.weak_constant;
    rep.decay_ok = rep.s_r <= rep.bound + slack;
    rep.analytic_ok = rep.bound <= rep.analytic_bound + slack;
    rep.weak_ok = rep.weak_norm <= rep.weak_bound * (1.0 + slack) + slack;
    return rep;
}

VerificationReport verify_certificate(const SingularSpectrum& spectrum, const WeakDecayCertificate& cert) {
    const VerificationReport rep = check_certificate(spectrum, cert);
    if (!rep.decay_ok) {
        throw CertificateUnsound("s_" + std::to_string(rep.r) + "(M) <= b", rep.s_r, rep.bound);
    }
    if (!rep.analytic_ok) throw CertificateUnsound("b <= analytic bound", rep.bound, rep.analytic_bound);
    if (!rep.weak_ok) throw CertificateUnsound("weak quasinorm <= certified constant", rep.weak_norm, rep.weak_bound);
    return rep;
}

VerificationReport verify_certificate(const WeightedKernelOperator& kop, const WeakDecayCertificate& cert) {
    if (kop.rows() != cert.rows || kop.cols() != cert.cols) {
        throw InvalidInput("verify_certificate: operator shape differs from the certificate's");
    }
    return verify_certificate(singular_values(materialize(kop)), cert);
}

// ---------------------------------------------------------------------------
// Text formats

MeasureInput read_measure(std::istream& in) {
    MeasureInput input;
    enum class Section { None, Mu, Nu } section = Section::None;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw InvalidInput("measure line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t == "MU") {
            section = Section::Mu;
            continue;
        }
        if (t == "NU") {
            section = Section::Nu;
            continue;
        }
        if (t.rfind("FUNCTION", 0) == 0 && (t.size() == 8 || std::isspace(static_cast<unsigned char>(t[8])))) {
            const std::string spec = text::trim(std::string_view(t).substr(8));
            if (spec.empty()) fail("FUNCTION needs a spec");
            if (input.function_spec) fail("duplicate FUNCTION line");
            input.function_spec = spec;
            continue;
        }
        if (section == Section::None) fail("atom line before any MU/NU section header");
        const auto tokens = text::split_ws(t);
        if (tokens.size() != 3) fail("expected 'position mass weight'");
        double v[3];
        for (int k = 0; k < 3; ++k)
            if (!text::parse_double(tokens[k], v[k]) || !std::isfinite(v[k])) fail("bad number '" + tokens[k] + "'");
        if (!(v[1] > 0.0)) fail("mass must be positive");
        (section == Section::Mu ? input.mu : input.nu).push_back({v[0], v[1], v[2]});
    }
    if (input.mu.empty()) throw InvalidInput("measure: MU section is empty or missing");
    if (input.nu.empty()) throw InvalidInput("measure: NU section is empty or missing");
    return input;
}

MeasureInput read_measure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open measure file '" + path + "'");
    try {
        return read_measure(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void write_measure(std::ostream& out, const WeightedKernelOperator& kop, const std::string& function_spec) {
    out << "FUNCTION " << function_spec << "\n";
    out << "MU\n";
    for (std::size_t i = 0; i < kop.rows(); ++i) {
        out << text::format_double(kop.mu()[i].position) << ' ' << text::format_double(kop.mu()[i].mass) << ' '
            << text::format_double(kop.phi()[i]) << '\n';
    }
    out << "NU\n";
    for (std::size_t j = 0; j < kop.cols(); ++j) {
        out << text::format_double(kop.nu()[j].position) << ' ' << text::format_double(kop.nu()[j].mass) << ' '
            << text::format_double(kop.psi()[j]) << '\n';
    }
}

namespace {

void write_indices(std::ostream& out, const char* key, const std::vector<std::size_t>& v) {
    out << key << ' ' << v.size();
    for (std::size_t i : v) out << ' ' << i;
    out << '\n';
}

}  // namespace

void write_certificate(std::ostream& out, const WeakDecayCertificate& cert, bool with_defects) {
    using text::format_double;
    out << "n " << cert.n << '\n';
    out << "shape " << cert.rows << ' ' << cert.cols << '\n';
    out << "scale " << format_double(cert.scale) << '\n';
    out << "truncation_radius " << format_double(cert.truncation_radius) << '\n';
    out << "truncation_tail_hs " << format_double(cert.truncation_tail_hs) << '\n';
    write_indices(out, "heavy_x", cert.heavy_x);
    write_indices(out, "heavy_y", cert.heavy_y);
    out << "partition " << cert.partition.size() << '\n';
    for (const Interval& iv : cert.partition.intervals()) {
        out << "  " << (iv.closed_right ? "closed " : "half_open ") << format_double(iv.lo) << ' '
            << format_double(iv.hi) << ' ' << format_double(iv.phi_weight) << ' ' << format_double(iv.psi_weight)
            << '\n';
    }
    out << "column_defect_rank " << cert.column_defect_rank << '\n';
    out << "row_defect_rank " << cert.row_defect_rank << '\n';
    out << "low_rank " << cert.low_rank << '\n';
    out << "defect_rank " << cert.defect_rank << '\n';
    out << "residual_hs " << format_double(cert.residual_hs) << '\n';
    out << "diag_hs " << format_double(cert.diag_hs) << '\n';
    out << "upper_hs " << format_double(cert.upper_hs) << '\n';
    out << "lower_hs " << format_double(cert.lower_hs) << '\n';
    out << "diag_block_bound " << format_double(cert.diag.block_bound) << '\n';
    out << "diag_weight_bound " << format_double(cert.diag.weight_bound) << '\n';
    out << "flat_upper " << format_double(cert.flat.upper) << '\n';
    out << "flat_lower " << format_double(cert.flat.lower) << '\n';
    out << "flat_upper_weighted " << format_double(cert.flat.upper_weighted) << '\n';
    out << "flat_lower_weighted " << format_double(cert.flat.lower_weighted) << '\n';
    out << "empirical_bound " << format_double(cert.empirical_bound) << '\n';
    out << "analytic_hs " << format_double(cert.analytic_hs) << '\n';
    out << "analytic_bound " << format_double(cert.analytic_bound) << '\n';
    out << "weak_constant " << format_double(cert.weak_constant) << '\n';
    if (!with_defects) return;
    out << "defect_vectors " << cert.defect_vectors.size() << '\n';
    for (const DefectVector& d : cert.defect_vectors) {
        out << "  " << (d.side == DefectSide::Column ? "column " : "row ") << d.interval << (d.times_f ? " f" : " 1");
        for (double c : d.coords) out << ' ' << format_double(c);
        out << '\n';
    }
}

void write_verification(std::ostream& out, const VerificationReport& rep) {
    using text::format_double;
    out << "verify r " << rep.r << '\n';
    out << "verify s_r " << format_double(rep.s_r) << " bound " << format_double(rep.bound) << ' '
        << (rep.decay_ok ? "ok" : "FAIL") << '\n';
    out << "verify bound " << format_double(rep.bound) << " analytic " << format_double(rep.analytic_bound) << ' '
        << (rep.analytic_ok ? "ok" : "FAIL") << '\n';
    out << "verify weak " << format_double(rep.weak_norm) << " constant " << format_double(rep.weak_bound) << ' '
        << (rep.weak_ok ? "ok" : "FAIL") << '\n';
}

}  // namespace lipdoi
