#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lipdoi/certificate.hpp"
#include "lipdoi/error.hpp"
#include "lipdoi/ideals.hpp"
#include "support.hpp"

using namespace lipdoi;

namespace {

std::vector<WeightedAtom> random_side(std::size_t count, std::mt19937_64& gen, bool heavy) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::set<double> used;
    std::vector<WeightedAtom> side;
    while (side.size() < count) {
        double x;
        if (ud(gen) < 0.5) {
            const double centre = std::floor(ud(gen) * 3.0) - 1.0;
            x = centre + 0.05 * nd(gen);
        } else {
            x = -4.0 + 8.0 * ud(gen);
        }
        if (!used.insert(x).second) continue;
        side.push_back({x, 0.1 + 0.9 * ud(gen), nd(gen)});
    }
    if (heavy) side[0].weight = 3.0 * std::sqrt(static_cast<double>(count));
    return side;
}

LipschitzFunction pick_function(std::size_t k) {
    switch (k % 4) {
        case 0: return functions::abs();
        case 1: return functions::pwl(functions::uniform_grid(-4, 4, 17), k);
        case 2: return functions::clamp(-0.5, 0.5);
        default: return functions::affine(2.5, -1.0);
    }
}

WeightedKernelOperator random_operator(std::size_t rows, std::size_t cols, std::mt19937_64& gen, std::size_t k) {
    std::bernoulli_distribution coin(0.5);
    return WeightedKernelOperator::from_atoms(random_side(rows, gen, coin(gen)), random_side(cols, gen, coin(gen)),
                                              pick_function(k));
}

// Entries of the kernel matrix straight from the definition.
double entry(const WeightedKernelOperator& kop, std::size_t i, std::size_t j) {
    const double x = kop.mu()[i].position, y = kop.nu()[j].position;
    const double dd = x == y ? 0.0 : (kop.f()(x) - kop.f()(y)) / (x - y);
    return std::sqrt(kop.mu()[i].mass) * kop.phi()[i] * dd * kop.psi()[j] * std::sqrt(kop.nu()[j].mass);
}

std::size_t rank_of(const Matrix& m) { return numerical_rank(singular_values(m), 1e-10); }

}  // namespace

TEST_CASE("measure and operator construction") {
    CHECK_THROWS_AS(DiscreteMeasure({{0.0, 1.0}, {0.0, 1.0}}), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure({{0.0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure({{NAN, 1.0}}), InvalidInput);
    const DiscreteMeasure m({{-2.0, 0.5}, {1.0, 0.25}});
    CHECK(m.total_mass() == 0.75);
    CHECK(m.max_abs_position() == 2.0);
    CHECK_THROWS_AS(WeightedKernelOperator(m, {1.0}, m, {1.0, 1.0}, functions::abs()), InvalidInput);
    CHECK_THROWS_AS(WeightedKernelOperator::from_atoms({{1, 1, 1}, {1, 2, 1}}, {{0, 1, 1}}, functions::abs()),
                    InvalidInput);
    const auto sorted = WeightedKernelOperator::from_atoms({{3, 1, 1}, {-1, 2, 5}}, {{0, 1, 1}}, functions::abs());
    CHECK(sorted.mu()[0].position == -1.0);
    CHECK(sorted.phi()[0] == 5.0);
}

TEST_CASE("materialize examples") {
    const auto zero = WeightedKernelOperator::from_atoms({{0, 1, 1}, {2, 1, 1}}, {{1, 1, 1}}, functions::constant(4));
    CHECK(max_abs(materialize(zero)) == 0.0);
    const auto one = WeightedKernelOperator::from_atoms({{0, 1, 1}}, {{1, 1, 1}}, functions::abs());
    const Matrix m = materialize(one);
    CHECK(m.rows() == 1);
    CHECK(m(0, 0) == 1.0);

    std::mt19937_64 gen(31);
    for (std::size_t k = 0; k < 20; ++k) {
        const auto kop = random_operator(15 + k, 10 + 2 * k, gen, k);
        const Matrix mm = materialize(kop);
        double direct = 0.0;
        for (std::size_t i = 0; i < kop.rows(); ++i)
            for (std::size_t j = 0; j < kop.cols(); ++j) {
                const double x = kop.mu()[i].position, y = kop.nu()[j].position;
                const double dd = (kop.f()(x) - kop.f()(y)) / (x - y);
                const double w = kop.mu()[i].mass * kop.nu()[j].mass * kop.phi()[i] * kop.phi()[i] *
                                 kop.psi()[j] * kop.psi()[j];
                direct += w * dd * dd;
                CHECK(mm(i, j) == doctest::Approx(entry(kop, i, j)).epsilon(1e-13));
            }
        CHECK(std::abs(oracle::frobenius(mm) * oracle::frobenius(mm) - direct) <= 1e-10 * (1 + direct));
    }
}

TEST_CASE("normalize examples") {
    const auto unit = WeightedKernelOperator::from_atoms({{0, 0.5, 1}, {1, 0.5, 1}}, {{0.5, 1, 1}}, functions::abs());
    const Normalized a = normalize(unit);
    CHECK(a.total() == doctest::Approx(1.0));
    CHECK(oracle::distance(materialize(a.op), materialize(unit)) <= 1e-15);

    const auto doubled = unit.with_weights({2, 2}, {1});
    const Normalized b = normalize(doubled);
    CHECK(b.phi_scale == doctest::Approx(2.0));
    CHECK(b.psi_scale == doctest::Approx(1.0));

    CHECK_THROWS_AS(normalize(unit.with_weights({0, 0}, {1})), InvalidInput);
    CHECK_THROWS_AS(normalize(unit.with_weights({1, 1}, {0})), InvalidInput);

    const Normalized flat = normalize(unit.with_function(functions::constant(2)));
    CHECK(flat.lip_scale == 1.0);
    CHECK(flat.op.f().lip() == 0.0);

    std::mt19937_64 gen(32);
    for (std::size_t k = 0; k < 20; ++k) {
        const auto kop = random_operator(12, 17, gen, k);
        const Normalized once = normalize(kop);
        CHECK(once.op.phi_norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(once.op.psi_norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(once.op.f().lip() == 1.0);
        const Normalized twice = normalize(once.op);
        CHECK(std::abs(twice.total() - 1.0) <= 1e-12);
        CHECK(oracle::distance(materialize(twice.op), materialize(once.op)) <= 1e-12);
        const Matrix original = materialize(kop);
        CHECK(oracle::distance(original, once.total() * materialize(once.op)) <= 1e-12 * oracle::frobenius(original));
    }
}

TEST_CASE("truncation examples") {
    const auto kop = normalize(WeightedKernelOperator::from_atoms({{-3, 1, 1}, {2, 1, 1}}, {{0, 1, 1}, {1.5, 1, 2}},
                                                                  functions::abs()))
                         .op;
    const Truncation t = truncation_radius(kop, 4);
    CHECK(t.radius == 3.0);
    CHECK(t.tail_hs == 0.0);
    CHECK(truncation_tail(kop, 3.0) == 0.0);
    CHECK(truncation_radius(kop, 1).radius == 3.0);
    CHECK(truncation_radius(kop, 1, TruncationMode::Doubling).tail_hs < 1.0);

    const auto origin = WeightedKernelOperator::from_atoms({{0, 1, 1}}, {{0, 1, 1}}, functions::abs());
    CHECK(truncation_radius(origin, 3).radius == 1.0);
    CHECK_THROWS_AS(truncation_radius(kop, 0), InvalidParameter);
}

TEST_CASE("two-cluster truncation tail against the double sum over cut entries") {
    std::mt19937_64 gen(33);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        std::vector<WeightedAtom> xs, ys;
        for (int a = 0; a < 20; ++a) {
            xs.push_back({-1.0 + 2.0 * ud(gen), 0.5 + ud(gen), 1.0});
            ys.push_back({-1.0 + 2.0 * ud(gen), 0.5 + ud(gen), 1.0});
        }
        for (int a = 0; a < 5; ++a) {
            xs.push_back({8.0 + ud(gen), 0.5 + ud(gen), 0.3});
            ys.push_back({-9.0 - ud(gen), 0.5 + ud(gen), 0.3});
        }
        const auto kop = normalize(WeightedKernelOperator::from_atoms(xs, ys, pick_function(k))).op;
        for (double radius : {2.0, 4.0, 8.5}) {
            double sum = 0.0;
            for (std::size_t i = 0; i < kop.rows(); ++i)
                for (std::size_t j = 0; j < kop.cols(); ++j)
                    if (std::abs(kop.mu()[i].position) > radius || std::abs(kop.nu()[j].position) > radius)
                        sum += entry(kop, i, j) * entry(kop, i, j);
            CHECK(truncation_tail(kop, radius) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
        }
        for (std::size_t n : {1u, 4u, 64u}) {
            const Truncation t = truncation_radius(kop, n, TruncationMode::Doubling);
            CHECK(t.tail_hs < 1.0 / std::sqrt(static_cast<double>(n)));
            CHECK(t.tail_hs == doctest::Approx(truncation_tail(kop, t.radius)));
        }
    }
}

TEST_CASE("heavy atoms") {
    const DiscreteMeasure uniform([] {
        std::vector<Atom> a;
        for (int k = 0; k < 10; ++k) a.push_back({double(k), 0.1});
        return a;
    }());
    const std::vector<double> ones(10, 1.0);
    CHECK(heavy_atoms(uniform, ones, 1).empty());
    CHECK(heavy_atoms(uniform, ones, 10).size() == 10);

    const DiscreteMeasure single({{0.5, 1.0}});
    const std::vector<double> w{1.0};
    for (std::size_t n : {1u, 3u, 100u}) CHECK(heavy_atoms(single, w, n) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(heavy_atoms(single, ones, 2), InvalidInput);

    std::mt19937_64 gen(34);
    for (std::size_t k = 0; k < 50; ++k) {
        const auto kop = normalize(random_operator(30, 25, gen, k)).op;
        for (std::size_t n : {1u, 8u, 40u}) {
            std::vector<std::size_t> brute;
            for (std::size_t i = 0; i < kop.rows(); ++i)
                if (kop.phi()[i] * kop.phi()[i] * kop.mu()[i].mass >= 1.0 / n) brute.push_back(i);
            const auto got = heavy_atoms(kop.mu(), kop.phi(), n);
            CHECK(got == brute);
            CHECK(got.size() <= n);
        }
    }
}

TEST_CASE("mask") {
    std::mt19937_64 gen(35);
    const auto kop = normalize(random_operator(20, 15, gen, 1)).op;
    CHECK(materialize(mask(kop, {}, {})) == materialize(kop));

    std::vector<std::size_t> all_x(kop.rows()), all_y(kop.cols());
    for (std::size_t i = 0; i < all_x.size(); ++i) all_x[i] = i;
    for (std::size_t j = 0; j < all_y.size(); ++j) all_y[j] = j;
    CHECK(max_abs(materialize(mask(kop, all_x, all_y))) == 0.0);
    const std::vector<std::size_t> bad{99};
    CHECK_THROWS_AS(mask(kop, bad, {}), InvalidInput);

    for (std::size_t k = 0; k < 30; ++k) {
        const auto op = normalize(random_operator(25, 20, gen, k)).op;
        const auto hx = heavy_atoms(op.mu(), op.phi(), 16);
        const auto hy = heavy_atoms(op.nu(), op.psi(), 16);
        const Matrix diff = materialize(op) - materialize(mask(op, hx, hy));
        CHECK(rank_of(diff) <= hx.size() + hy.size());
    }
}

TEST_CASE("partition examples") {
    std::mt19937_64 gen(36);
    const auto kop = normalize(random_operator(10, 10, gen, 0)).op;
    const auto spread = kop.with_weights(std::vector<double>(10, 0.3), std::vector<double>(10, 0.3));
    const IntervalPartition one = partition(spread, 1, 5.0);
    CHECK(one.size() == 1);
    CHECK(one[0].lo == -5.0);
    CHECK(one[0].hi == 5.0);
    CHECK(one[0].closed_right);

    // 2n positions shared by both sides, each side weight 1/(2n) per atom
    for (std::size_t n : {2u, 5u, 16u}) {
        std::vector<WeightedAtom> side;
        for (std::size_t a = 0; a < 2 * n; ++a) side.push_back({static_cast<double>(a), 1.0 / (2.0 * n), 1.0});
        const auto uniform = WeightedKernelOperator::from_atoms(side, side, functions::abs());
        const auto part = partition(uniform, n, 2.0 * n);
        CHECK(part.size() <= n);
        for (const Interval& iv : part.intervals()) CHECK(iv.combined_weight() <= 4.0 / n + 1e-15);
    }

    const auto heavy = kop.with_weights(std::vector<double>(10, 0.0), [] {
        std::vector<double> w(10, 0.0);
        w[3] = 10.0;
        return w;
    }());
    CHECK_THROWS_AS(partition(heavy, 4, 5.0), PreconditionViolation);
    CHECK_THROWS_AS(partition(spread, 4, 0.0), InvalidParameter);
}

TEST_CASE("partition properties on random instances") {
    std::mt19937_64 gen(37);
    for (std::size_t k = 0; k < 100; ++k) {
        const auto op = normalize(random_operator(20 + k % 40, 15 + k % 30, gen, k)).op;
        const std::size_t n = std::size_t{1} << (k % 7);
        const double radius = truncation_radius(op, n).radius;
        const auto masked =
            mask(op, heavy_atoms(op.mu(), op.phi(), n), heavy_atoms(op.nu(), op.psi(), n), radius);
        const auto part = partition(masked, n, radius);
        CHECK(part.size() <= n);
        CHECK(part[0].lo == -radius);
        CHECK(part[part.size() - 1].hi == radius);
        std::vector<double> phi_w(part.size(), 0.0), psi_w(part.size(), 0.0);
        for (std::size_t i = 0; i < masked.rows(); ++i) {
            const double x = masked.mu()[i].position;
            std::size_t hits = 0;
            for (std::size_t t = 0; t < part.size(); ++t)
                if (part[t].contains(x)) {
                    ++hits;
                    phi_w[t] += masked.phi()[i] * masked.phi()[i] * masked.mu()[i].mass;
                }
            CHECK(hits == 1);
        }
        for (std::size_t j = 0; j < masked.cols(); ++j) {
            const std::size_t t = part.locate(masked.nu()[j].position);
            REQUIRE(t != IntervalPartition::npos);
            psi_w[t] += masked.psi()[j] * masked.psi()[j] * masked.nu()[j].mass;
        }
        for (std::size_t t = 0; t < part.size(); ++t) {
            CHECK(part[t].combined_weight() <= 4.0 / n * (1 + 1e-12));
            CHECK(part[t].phi_weight == doctest::Approx(phi_w[t]).epsilon(1e-12));
            CHECK(part[t].psi_weight == doctest::Approx(psi_w[t]).epsilon(1e-12));
            if (t + 1 < part.size()) {
                CHECK(part[t].hi == part[t + 1].lo);
                CHECK(part[t].combined_weight() > 2.0 / n);
                CHECK_FALSE(part[t].closed_right);
            }
        }
    }
}

TEST_CASE("partition locate") {
    const IntervalPartition part({{-2, 0, false, 0, 0}, {0, 1, false, 0, 0}, {1, 2, true, 0, 0}}, 2);
    CHECK(part.locate(-2) == 0);
    CHECK(part.locate(0) == 1);
    CHECK(part.locate(1.5) == 2);
    CHECK(part.locate(2) == 2);
    CHECK(part.locate(2.5) == IntervalPartition::npos);
    CHECK(part.locate(-2.5) == IntervalPartition::npos);
    CHECK_THROWS_AS(IntervalPartition({{-2, 0, false, 0, 0}, {0.5, 2, true, 0, 0}}, 2), InvalidInput);
    CHECK_THROWS_AS(IntervalPartition({{-2, 2, false, 0, 0}}, 2), InvalidInput);
}

TEST_CASE("split_blocks") {
    const IntervalPartition one({{-1, 1, true, 0, 0}}, 1);
    const auto b1 = split_blocks(one);
    CHECK(b1.diag.size() == 1);
    CHECK(b1.upper.empty());
    CHECK(b1.lower.empty());

    const IntervalPartition two({{-1, 0, false, 0, 0}, {0, 1, true, 0, 0}}, 1);
    const auto b2 = split_blocks(two);
    CHECK(b2.diag.size() == 2);
    CHECK(b2.upper.size() == 2);
    CHECK(b2.lower.empty());

    std::vector<Interval> ivs;
    const std::vector<double> cuts{-3, -2.5, -1, 0, 0.1, 2, 3};
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) ivs.push_back({cuts[k], cuts[k + 1], k + 2 == cuts.size(), 0, 0});
    const IntervalPartition six(ivs, 3);
    const auto b6 = split_blocks(six);
    CHECK(b6.diag.size() + b6.upper.size() + b6.lower.size() == 36);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto* list : {&b6.diag, &b6.upper, &b6.lower})
        for (const auto& p : *list) CHECK(seen.insert(p).second);
    CHECK(seen.size() == 36);
    for (const auto& [i, j] : b6.upper) CHECK(six[i].length() >= six[j].length());
    for (const auto& [i, j] : b6.lower) CHECK(six[i].length() < six[j].length());
}

TEST_CASE("diagonal blocks") {
    std::mt19937_64 gen(38);
    const auto flat = normalize(random_operator(20, 20, gen, 0).with_function(functions::constant(1))).op;
    const auto fp = partition(mask(flat, heavy_atoms(flat.mu(), flat.phi(), 4), heavy_atoms(flat.nu(), flat.psi(), 4)),
                              4, 5.0);
    CHECK(diag_block_hs(flat, fp, 4).hs == 0.0);

    // a single interval holds the whole operator
    const auto light = normalize(random_operator(10, 10, gen, 1).with_weights(std::vector<double>(10, 1.0),
                                                                              std::vector<double>(10, 1.0)))
                           .op;
    const auto whole = partition(light, 1, 5.0);
    REQUIRE(whole.size() == 1);
    const auto report = diag_block_hs(light, whole, 1);
    CHECK(report.hs == doctest::Approx(oracle::frobenius(materialize(light))));
    CHECK(report.hs <= 4.0);

    for (std::size_t k = 0; k < 60; ++k) {
        const auto op = normalize(random_operator(40, 40, gen, k)).op;
        for (std::size_t n : {4u, 16u, 64u}) {
            const double radius = truncation_radius(op, n).radius;
            const auto masked =
                mask(op, heavy_atoms(op.mu(), op.phi(), n), heavy_atoms(op.nu(), op.psi(), n), radius);
            const auto part = partition(masked, n, radius);
            const auto d = diag_block_hs(masked, part, n);
            CHECK(d.block_bound == doctest::Approx(4.0 / std::sqrt(double(n))));
            CHECK(d.hs <= d.block_bound);
            CHECK(d.hs <= d.weight_bound * (1 + 1e-12));
            CHECK(d.weight_bound <= 2.0 / std::sqrt(double(n)) * (1 + 1e-12));
        }
    }
}

TEST_CASE("taylor defects") {
    // constant f: the two vectors per interval are parallel
    std::mt19937_64 gen(39);
    const auto flat = normalize(random_operator(30, 30, gen, 0).with_function(functions::constant(2))).op;
    const std::size_t n = 8;
    const auto masked = mask(flat, heavy_atoms(flat.mu(), flat.phi(), n), heavy_atoms(flat.nu(), flat.psi(), n));
    const auto part = partition(masked, n, 5.0);
    const auto defects = taylor_defects(part, masked, DefectSide::Column);
    std::vector<std::vector<double>> coords;
    std::set<std::size_t> nonempty;
    for (const auto& d : defects) {
        coords.push_back(d.coords);
        nonempty.insert(d.interval);
    }
    CHECK(defects.size() == 2 * nonempty.size());
    CHECK(orthonormal_basis(coords, masked.cols()).size() == nonempty.size());

    // intervals without column atoms contribute nothing
    const auto one_sided = WeightedKernelOperator::from_atoms(
        {{-3, 1, 0.1}, {-2, 1, 0.1}, {2, 1, 0.1}, {3, 1, 0.1}}, {{-2.5, 1, 0.1}, {-2.2, 1, 0.1}}, functions::abs());
    const IntervalPartition halves({{-4, 0, false, 0, 0}, {0, 4, true, 0, 0}}, 4);
    const auto col = taylor_defects(halves, one_sided, DefectSide::Column);
    CHECK(col.size() == 2);
    for (const auto& d : col) CHECK(d.interval == 0);
    CHECK(taylor_defects(halves, one_sided, DefectSide::Row).size() == 4);
}

TEST_CASE("upper blocks agree with the corrected kernel off the column defects") {
    std::mt19937_64 gen(40);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t k = 0; k < 20; ++k) {
        const auto kop = random_operator(30, 30, gen, k);
        const std::size_t n = 4 + k % 5;
        CertificateOptions opts;
        opts.keep_residual_matrix = true;
        const auto cert = build_certificate(kop, n, opts);
        const auto op = normalize(kop).op;
        const auto masked = mask(op, cert.heavy_x, cert.heavy_y, cert.truncation_radius);
        const Matrix mm = materialize(masked);
        const Matrix& e = *cert.residual;
        const auto& part = cert.partition;
        const auto defects = taylor_defects(part, masked, DefectSide::Column);
        for (std::size_t jv = 0; jv < part.size(); ++jv) {
            // random g supported on J, orthogonal to psi chi_J and psi f chi_J
            std::vector<std::vector<double>> local;
            for (const auto& d : defects)
                if (d.interval == jv) local.push_back(d.coords);
            std::vector<double> g(op.cols(), 0.0);
            for (std::size_t j = 0; j < op.cols(); ++j)
                if (part.locate(op.nu()[j].position) == jv) g[j] = nd(gen);
            const Matrix proj = complement_projector(local, op.cols());
            std::vector<double> pg(op.cols(), 0.0);
            for (std::size_t a = 0; a < op.cols(); ++a)
                for (std::size_t b = 0; b < op.cols(); ++b) pg[a] += proj(a, b) * g[b];
            for (std::size_t i = 0; i < op.rows(); ++i) {
                const std::size_t iv = part.locate(op.mu()[i].position);
                if (iv == IntervalPartition::npos || iv == jv || !is_upper_pair(part[iv], part[jv])) continue;
                double lhs = 0.0, rhs = 0.0;
                for (std::size_t j = 0; j < op.cols(); ++j) {
                    if (part.locate(op.nu()[j].position) != jv) continue;
                    lhs += mm(i, j) * pg[j];
                    rhs += e(i, j) * pg[j];
                }
                CHECK(std::abs(lhs - rhs) <= 1e-12);
            }
        }
    }
}

TEST_CASE("separation sums and distance ordering") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const std::size_t count = 1 + k % 40;
        std::vector<double> cuts{0.0};
        for (std::size_t t = 0; t < count; ++t) {
            const double len = ud(gen) < 0.3 ? std::pow(10.0, -3.0 * ud(gen)) : ud(gen);
            cuts.push_back(cuts.back() + len);
        }
        std::vector<Interval> ivs;
        const double half = 0.5 * cuts.back();
        for (std::size_t t = 0; t < count; ++t)
            ivs.push_back({cuts[t] - half, t + 1 == count ? half : cuts[t + 1] - half, t + 1 == count, 0, 0});
        const IntervalPartition part(ivs, half);
        const auto up = separation_sums(part);
        const auto lo = lower_separation_sums(part);
        for (std::size_t j = 0; j < count; ++j) {
            double brute_up = 0.0, brute_lo = 0.0;
            std::vector<double> dists;
            for (std::size_t i = 0; i < count; ++i) {
                if (i == j) continue;
                const double dist = interval_distance(part[i], part[j]);
                const double lj = part[j].length();
                if (part[i].length() >= lj) {
                    brute_up += lj * lj / ((lj + dist) * (lj + dist));
                    dists.push_back(dist);
                }
            }
            for (std::size_t i = 0; i < count; ++i) {
                if (i == j || part[j].length() >= part[i].length()) continue;
                const double dist = interval_distance(part[i], part[j]);
                const double lj = part[j].length();
                brute_lo += lj * lj / ((lj + dist) * (lj + dist));
            }
            CHECK(up[j] == doctest::Approx(brute_up).epsilon(1e-12));
            CHECK(lo[j] == doctest::Approx(brute_lo).epsilon(1e-12));
            CHECK(up[j] <= kSeparationConstant);
            CHECK(lo[j] <= kSeparationConstant);
            std::sort(dists.begin(), dists.end());
            for (std::size_t r = 0; r < dists.size(); ++r) {
                const double kth = static_cast<double>(r + 1);
                CHECK(dists[r] >= (kth - 3.0) / 2.0 * part[j].length() - 1e-12);
            }
        }
    }
}

TEST_CASE("flat bound") {
    const IntervalPartition one({{-1, 1, true, 0.5, 0.5}}, 1);
    const FlatBound fb = flat_bound(one, 3);
    CHECK(fb.upper == 0.0);
    CHECK(fb.lower == 0.0);

    const IntervalPartition two({{-1, 0, false, 0.5, 0.5}, {0, 1, true, 0.5, 0.5}}, 1);
    const FlatBound f2 = flat_bound(two, 4);
    // two adjacent unit intervals, both ordered pairs upper: 2 * 16/16
    CHECK(f2.upper == doctest::Approx(std::sqrt(2.0)));
    CHECK(f2.lower == 0.0);
    CHECK(f2.upper_weighted == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("certificate examples") {
    std::mt19937_64 gen(42);
    const auto zero = random_operator(20, 20, gen, 0).with_function(functions::constant(5));
    const auto cert = build_certificate(zero, 4);
    CHECK(cert.residual_hs == 0.0);
    CHECK(cert.empirical_bound == 0.0);
    CHECK(cert.weak_constant == 0.0);
    const auto rep = verify_certificate(zero, cert);
    CHECK(rep.sound());
    CHECK(rep.s_r == 0.0);
    CHECK(rep.weak_norm == 0.0);

    for (std::size_t k = 0; k < 10; ++k) {
        const auto kop = random_operator(15, 25, gen, k);
        const auto c1 = build_certificate(kop, 1);
        CHECK(c1.defect_rank <= 7);
        CHECK(c1.empirical_bound <= c1.residual_hs);
    }
    CHECK_THROWS_AS(build_certificate(zero, 0), InvalidParameter);
}

TEST_CASE("certificate soundness on random instances") {
    std::mt19937_64 gen(43);
    const std::vector<std::size_t> ns{1, 2, 4, 8, 16, 32, 64};
    for (std::size_t k = 0; k < 100; ++k) {
        const auto kop = random_operator(20 + (k * 7) % 60, 20 + (k * 11) % 60, gen, k);
        const std::size_t n = ns[k % ns.size()];
        CertificateOptions opts;
        opts.keep_residual_matrix = true;
        opts.truncation = k % 3 == 0 ? TruncationMode::Doubling : TruncationMode::Exact;
        const auto cert = build_certificate(kop, n, opts);
        CHECK(cert.heavy_x.size() <= n);
        CHECK(cert.heavy_y.size() <= n);
        CHECK(cert.partition.size() <= n);
        CHECK(cert.defect_rank <= 7 * n);
        CHECK(cert.column_defect_rank <= 2 * cert.partition.size());
        CHECK(cert.row_defect_rank <= 2 * cert.partition.size());
        CHECK(cert.empirical_bound == doctest::Approx(cert.residual_hs / std::sqrt(n + 1.0)));
        CHECK(cert.empirical_bound <= cert.analytic_bound + 1e-9);
        CHECK(cert.diag_hs <= cert.diag.block_bound);

        const Matrix& e = *cert.residual;
        CHECK(oracle::frobenius(e) == doctest::Approx(cert.residual_hs).epsilon(1e-12));

        const auto op = normalize(kop).op;
        const Matrix mn = materialize(op);
        for (std::size_t i = 0; i < op.rows(); ++i)
            for (std::size_t j = 0; j < op.cols(); ++j) {
                const double cap =
                    std::sqrt(op.mu()[i].mass) * std::abs(op.phi()[i]) * std::abs(op.psi()[j]) * std::sqrt(op.nu()[j].mass);
                CHECK(std::abs(mn(i, j)) <= cap * (1 + 1e-12));
                CHECK(std::abs(e(i, j)) <= cap * (1 + 1e-12));
            }
        CHECK(rank_of(mn - e) <= cert.low_rank);

        const auto spectrum = singular_values(materialize(kop));
        const auto rep = check_certificate(spectrum, cert);
        CHECK(rep.decay_ok);
        CHECK(rep.analytic_ok);
        CHECK(rep.weak_ok);
        CHECK_NOTHROW(verify_certificate(kop, cert));
    }
}

TEST_CASE("M and E agree off the heavy atoms and the defect spans") {
    std::mt19937_64 gen(44);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto kop = random_operator(40, 40, gen, k);
        CertificateOptions opts;
        opts.keep_residual_matrix = true;
        opts.keep_defect_vectors = true;
        const std::size_t n = 4;
        const auto cert = build_certificate(kop, n, opts);
        const auto op = normalize(kop).op;
        std::vector<std::vector<double>> cols, rows;
        for (const auto& d : cert.defect_vectors) (d.side == DefectSide::Column ? cols : rows).push_back(d.coords);
        for (std::size_t j : cert.heavy_y) {
            std::vector<double> ej(op.cols(), 0.0);
            ej[j] = 1.0;
            cols.push_back(ej);
        }
        for (std::size_t i : cert.heavy_x) {
            std::vector<double> ei(op.rows(), 0.0);
            ei[i] = 1.0;
            rows.push_back(ei);
        }
        const Matrix pc = complement_projector(cols, op.cols());
        const Matrix pr = complement_projector(rows, op.rows());
        const Matrix lhs = oracle::product(oracle::product(pr, materialize(op)), pc);
        const Matrix rhs = oracle::product(oracle::product(pr, *cert.residual), pc);
        CHECK(oracle::distance(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("corrupted certificates are rejected") {
    std::mt19937_64 gen(45);
    const auto kop = random_operator(40, 40, gen, 1);
    const auto cert = build_certificate(kop, 2);
    const auto spectrum = singular_values(materialize(kop));
    REQUIRE(verify_certificate(spectrum, cert).sound());
    const double s_r = spectrum.at_or_zero(cert.defect_rank) / cert.scale;
    REQUIRE(s_r > 1e-6);

    auto low = cert;
    low.empirical_bound = 0.5 * s_r;
    CHECK_THROWS_AS(verify_certificate(spectrum, low), CertificateUnsound);
    try {
        verify_certificate(spectrum, low);
    } catch (const CertificateUnsound& e) {
        CHECK(e.measured() == doctest::Approx(s_r));
        CHECK(e.bound() == doctest::Approx(0.5 * s_r));
    }

    auto halved = cert;
    halved.analytic_bound = 0.5 * cert.empirical_bound;
    CHECK_THROWS_AS(verify_certificate(spectrum, halved), CertificateUnsound);

    auto weak = cert;
    weak.weak_constant = 0.0;
    CHECK_THROWS_AS(verify_certificate(spectrum, weak), CertificateUnsound);

    CHECK_THROWS_AS(verify_certificate(random_operator(5, 5, gen, 0), cert), InvalidInput);
}

TEST_CASE("measure file format") {
    std::istringstream in(
        "# kernel\nFUNCTION abs\nMU\n-1 0.5 1\n2 0.25 -0.5\n\nNU\n0 1 2\n");
    const auto input = read_measure(in);
    CHECK(input.function_spec == "abs");
    CHECK(input.mu.size() == 2);
    CHECK(input.nu.size() == 1);
    CHECK(input.mu[1].weight == -0.5);

    const auto kop = WeightedKernelOperator::from_atoms(input.mu, input.nu, functions::abs());
    std::ostringstream out;
    write_measure(out, kop, "abs");
    std::istringstream back(out.str());
    const auto again = read_measure(back);
    CHECK(again.mu.size() == 2);
    CHECK(again.mu[0].position == -1.0);
    CHECK(again.nu[0].weight == 2.0);

    for (const char* bad : {"1 1 1\nMU\n", "MU\n1 1\nNU\n0 1 1\n", "MU\n1 0 1\nNU\n0 1 1\n",
                            "MU\n1 x 1\nNU\n0 1 1\n", "MU\n1 1 1\n", "NU\n1 1 1\n",
                            "FUNCTION abs\nFUNCTION abs\nMU\n1 1 1\nNU\n0 1 1\n", "MU\n1 1 inf\nNU\n0 1 1\n"}) {
        std::istringstream s(bad);
        CHECK_THROWS_AS(read_measure(s), InvalidInput);
    }
    CHECK_THROWS_AS(read_measure_file("/nonexistent/measure.txt"), InvalidInput);
}

TEST_CASE("certificate text record") {
    std::mt19937_64 gen(46);
    const auto kop = random_operator(12, 12, gen, 0);
    CertificateOptions opts;
    opts.keep_defect_vectors = true;
    const auto cert = build_certificate(kop, 4, opts);
    std::ostringstream out;
    write_certificate(out, cert, true);
    const std::string text = out.str();
    for (const char* key : {"n 4\n", "shape 12 12\n", "truncation_radius ", "heavy_x ", "partition ",
                            "defect_rank ", "residual_hs ", "empirical_bound ", "analytic_bound ", "weak_constant ",
                            "defect_vectors "})
        CHECK(text.find(key) != std::string::npos);
    std::ostringstream plain;
    write_certificate(plain, cert);
    CHECK(plain.str().find("defect_vectors") == std::string::npos);

    std::ostringstream ver;
    write_verification(ver, verify_certificate(kop, cert));
    CHECK(ver.str().find("FAIL") == std::string::npos);
    CHECK(ver.str().find("verify r ") == 0);
}
