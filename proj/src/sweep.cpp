#include "lipdoi/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "lipdoi/doi.hpp"
#include "lipdoi/error.hpp"
#include "lipdoi/ideals.hpp"
#include "lipdoi/text_format.hpp"

namespace lipdoi {

// ---------------------------------------------------------------------------
// Names

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::RankOne: return "rank_one";
        case ExperimentKind::TraceClass: return "trace_class";
        case ExperimentKind::Matsaev: return "matsaev";
        case ExperimentKind::Interp: return "interp";
        case ExperimentKind::Certificate: return "certificate";
    }
    return "unknown";
}

std::string to_string(Scenario scenario) { return scenario == Scenario::Degenerate ? "degenerate" : "generic"; }

std::string to_string(ReportFormat format) { return format == ReportFormat::Json ? "json" : "csv"; }

ExperimentKind parse_experiment_kind(const std::string& s) {
    for (auto k : {ExperimentKind::RankOne, ExperimentKind::TraceClass, ExperimentKind::Matsaev, ExperimentKind::Interp,
                   ExperimentKind::Certificate}) {
        if (s == to_string(k)) return k;
    }
    throw InvalidInput("config: unknown experiment '" + s +
                       "' (expected rank_one, trace_class, matsaev, interp or certificate)");
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw InvalidInput("unknown report format '" + s + "' (expected csv or json)");
}

// ---------------------------------------------------------------------------
// Config

namespace {

using nlohmann::json;

bool nonnegative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::uint64_t get_unsigned(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!nonnegative_integer(v)) throw InvalidInput(std::string("config: '") + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

double get_number(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw InvalidInput(std::string("config: '") + key + "' must be a number");
    return v.get<double>();
}

std::string get_string(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw InvalidInput(std::string("config: '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::size_t> get_counts(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array()) throw InvalidInput(std::string("config: '") + key + "' must be an array");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
        if (!nonnegative_integer(e)) {
            throw InvalidInput(std::string("config: '") + key + "' entries must be nonnegative integers");
        }
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

LipschitzFunction function_from_config(const json& spec) {
    if (spec.is_string()) return function_from_string(spec.get<std::string>());
    return function_from_json(spec);
}

}  // namespace

std::vector<LipschitzFunction> SweepConfig::build_functions() const {
    std::vector<LipschitzFunction> out;
    out.reserve(functions.size());
    for (const auto& spec : functions) out.push_back(function_from_config(spec));
    return out;
}

void validate(const SweepConfig& cfg) {
    if (cfg.dimensions.empty()) throw InvalidInput("config: 'dimensions' must not be empty");
    for (std::size_t d : cfg.dimensions)
        if (d < 2) throw InvalidParameter("config: every dimension must be >= 2");
    if (cfg.ensemble < 1) throw InvalidParameter("config: 'ensemble' must be >= 1");
    if (cfg.functions.empty()) throw InvalidInput("config: at least one function is required");
    if (!(cfg.p >= 1.0) || !std::isfinite(cfg.p)) throw InvalidParameter("config: 'p' must be >= 1");
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) throw InvalidParameter("config: 'epsilon' must be > 0");
    if (!(cfg.scale >= 0.0) || !std::isfinite(cfg.scale)) throw InvalidParameter("config: 'scale' must be >= 0");
    if (cfg.c && !std::isfinite(*cfg.c)) throw InvalidParameter("config: 'c' must be finite");
    if (cfg.n_values.empty()) throw InvalidInput("config: 'n_values' must not be empty");
    for (std::size_t n : cfg.n_values)
        if (n < 1) throw InvalidParameter("config: every n must be >= 1");
    (void)cfg.build_functions();
}

SweepConfig parse_sweep_config(const json& j) {
    if (!j.is_object()) throw InvalidInput("config: top level must be a JSON object");
    static const std::set<std::string> known{"experiment", "dimensions", "ensemble", "seed",     "functions",
                                             "function",   "p",          "epsilon",  "output",   "format",
                                             "n_values",   "scenario",   "c",        "scale",    "truncation"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw InvalidInput("config: unknown key '" + key + "'");
    }
    if (!j.contains("experiment")) throw InvalidInput("config: 'experiment' is required");
    if (!j.contains("dimensions")) throw InvalidInput("config: 'dimensions' is required");

    SweepConfig cfg;
    cfg.experiment = parse_experiment_kind(get_string(j, "experiment"));
    cfg.dimensions = get_counts(j, "dimensions");
    if (j.contains("ensemble")) cfg.ensemble = get_unsigned(j, "ensemble");
    if (j.contains("seed")) cfg.seed = get_unsigned(j, "seed");
    if (j.contains("functions") && j.contains("function")) {
        throw InvalidInput("config: give either 'function' or 'functions', not both");
    }
    if (j.contains("functions")) {
        if (!j.at("functions").is_array()) throw InvalidInput("config: 'functions' must be an array");
        for (const auto& f : j.at("functions")) cfg.functions.push_back(f);
    } else if (j.contains("function")) {
        cfg.functions.push_back(j.at("function"));
    } else {
        cfg.functions.push_back("abs");
    }
    if (j.contains("p")) cfg.p = get_number(j, "p");
    if (j.contains("epsilon")) cfg.epsilon = get_number(j, "epsilon");
    if (j.contains("output")) cfg.output = get_string(j, "output");
    if (j.contains("format")) cfg.format = parse_report_format(get_string(j, "format"));
    if (j.contains("n_values")) cfg.n_values = get_counts(j, "n_values");
    if (j.contains("scenario")) {
        const std::string s = get_string(j, "scenario");
        if (s == "generic") {
            cfg.scenario = Scenario::Generic;
        } else if (s == "degenerate") {
            cfg.scenario = Scenario::Degenerate;
        } else {
            throw InvalidInput("config: unknown scenario '" + s + "' (expected generic or degenerate)");
        }
    }
    if (j.contains("c")) cfg.c = get_number(j, "c");
    if (j.contains("scale")) cfg.scale = get_number(j, "scale");
    if (j.contains("truncation")) {
        const std::string s = get_string(j, "truncation");
        if (s == "exact") {
            cfg.truncation = TruncationMode::Exact;
        } else if (s == "doubling") {
            cfg.truncation = TruncationMode::Doubling;
        } else {
            throw InvalidInput("config: unknown truncation '" + s + "' (expected exact or doubling)");
        }
    }
    validate(cfg);
    return cfg;
}

SweepConfig read_sweep_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(path + ": invalid JSON: " + e.what());
    }
    try {
        return parse_sweep_config(j);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Report bookkeeping

std::size_t ExperimentReport::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidInput("report: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

double ExperimentReport::max_value(const std::string& function, const std::string& column,
                                   std::size_t dimension) const {
    const std::size_t c = column_index(column);
    double m = 0.0;
    for (const ReportRow& r : rows)
        if (r.function == function && r.dimension == dimension) m = std::max(m, r.values[c]);
    return m;
}

std::vector<std::string> ExperimentReport::function_names() const {
    std::vector<std::string> names;
    for (const ReportRow& r : rows)
        if (std::find(names.begin(), names.end(), r.function) == names.end()) names.push_back(r.function);
    return names;
}

namespace {

std::vector<std::size_t> dimensions_of(const std::vector<ReportRow>& rows, const std::string& function) {
    std::set<std::size_t> dims;
    for (const ReportRow& r : rows)
        if (r.function == function) dims.insert(r.dimension);
    return {dims.begin(), dims.end()};
}

}  // namespace

bool ExperimentReport::bounded(const std::string& function, const std::string& column) const {
    const auto dims = dimensions_of(rows, function);
    if (dims.empty()) return true;
    const double small = max_value(function, column, dims.front());
    const double large = max_value(function, column, dims.back());
    return large <= kBoundednessFactor * small;
}

void summarize(ExperimentReport& report) {
    report.summary.clear();
    for (const std::string& f : report.function_names()) {
        const auto dims = dimensions_of(report.rows, f);
        for (const std::string& col : report.primary_columns) {
            const double base = report.max_value(f, col, dims.front());
            for (std::size_t d : dims) {
                SummaryEntry e{f, col, d, report.max_value(f, col, d), 1.0, true};
                if (base > 0.0) {
                    e.growth = e.max / base;
                } else {
                    // growth undefined against a zero baseline
                    e.growth = e.max == 0.0 ? 1.0 : 0.0;
                }
                e.bounded = e.max <= kBoundednessFactor * base;
                report.summary.push_back(std::move(e));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ensembles

SymmetricMatrix random_symmetric(std::size_t d, CounterRng& rng) {
    Matrix m(d, d);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) m(i, j) = m(j, i) = s * rng.normal();
    return SymmetricMatrix(m);
}

std::vector<double> random_unit_vector(std::size_t d, CounterRng& rng) {
    std::vector<double> u(d);
    double n = 0.0;
    while (n == 0.0) {
        for (double& x : u) x = rng.normal();
        n = norm2(u);
    }
    for (double& x : u) x /= n;
    return u;
}

Matrix random_orthogonal(std::size_t d, CounterRng& rng) {
    Matrix g(d, d);
    for (double& x : g.data()) x = rng.normal();
    std::vector<std::vector<double>> reflectors;
    std::vector<double> diag_sign(d, 1.0);
    std::vector<double> w(d);
    for (std::size_t k = 0; k + 1 < d; ++k) {
        std::vector<double> v(d - k);
        for (std::size_t i = k; i < d; ++i) v[i - k] = g(i, k);
        const double norm = norm2(v);
        if (norm == 0.0) {
            reflectors.emplace_back();
            continue;
        }
        const double alpha = v[0] >= 0.0 ? -norm : norm;
        diag_sign[k] = alpha > 0.0 ? 1.0 : -1.0;
        v[0] -= alpha;
        const double vn = norm2(v);
        if (vn == 0.0) {
            reflectors.emplace_back();
            continue;
        }
        for (double& x : v) x /= vn;
        // g[k:, k:] -= 2 v (v^T g[k:, k:])
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = k; i < d; ++i) {
            const double vi = v[i - k];
            const auto row = g.row(i);
            for (std::size_t j = k; j < d; ++j) w[j] += vi * row[j];
        }
        for (std::size_t i = k; i < d; ++i) {
            const double vi = 2.0 * v[i - k];
            auto row = g.row(i);
            for (std::size_t j = k; j < d; ++j) row[j] -= vi * w[j];
        }
        reflectors.push_back(std::move(v));
    }
    diag_sign[d - 1] = g(d - 1, d - 1) >= 0.0 ? 1.0 : -1.0;

    // Q = H_0 H_1 ... H_{d-2}, applied to the identity from the right end.
    Matrix q = Matrix::identity(d);
    for (std::size_t k = reflectors.size(); k-- > 0;) {
        const auto& v = reflectors[k];
        if (v.empty()) continue;
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = k; i < d; ++i) {
            const double vi = v[i - k];
            const auto row = q.row(i);
            for (std::size_t j = 0; j < d; ++j) w[j] += vi * row[j];
        }
        for (std::size_t i = k; i < d; ++i) {
            const double vi = 2.0 * v[i - k];
            auto row = q.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] -= vi * w[j];
        }
    }
    // Q diag(sign(R_kk)) is Haar distributed.
    for (std::size_t i = 0; i < d; ++i) {
        auto row = q.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] *= diag_sign[j];
    }
    return q;
}

SymmetricMatrix random_degenerate_symmetric(std::size_t d, CounterRng& rng, Matrix* frame) {
    Matrix q = random_orthogonal(d, rng);
    std::vector<double> levels(d);
    for (double& l : levels) l = static_cast<double>(rng.below(3)) - 1.0;
    Matrix qd = q;
    for (std::size_t i = 0; i < d; ++i) {
        auto row = qd.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] *= levels[j];
    }
    SymmetricMatrix a(matmul_nt(qd, q));
    if (frame) *frame = std::move(q);
    return a;
}

namespace {

struct TraceClassSample {
    Matrix t;
    std::vector<double> sigma;  // singular values of t, nonincreasing
};

TraceClassSample sample_trace_class(std::size_t d, CounterRng& rng) {
    std::vector<double> sigma(d);
    for (std::size_t j = 0; j < d; ++j) sigma[j] = rng.uniform(0.05, 1.0) / static_cast<double>(1 + j);
    std::sort(sigma.begin(), sigma.end(), std::greater<>());
    double total = 0.0;
    for (double s : sigma) total += s;
    for (double& s : sigma) s /= total;
    Matrix q1 = random_orthogonal(d, rng);
    const Matrix q2 = random_orthogonal(d, rng);
    for (std::size_t i = 0; i < d; ++i) {
        auto row = q1.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] *= sigma[j];
    }
    return {matmul_nt(q1, q2), std::move(sigma)};
}

}  // namespace

Matrix random_trace_class(std::size_t d, CounterRng& rng) { return sample_trace_class(d, rng).t; }

WeightedKernelOperator random_kernel_operator(std::size_t atoms, const LipschitzFunction& f, CounterRng& rng) {
    double centers[3];
    for (double& c : centers) c = rng.uniform(-3.0, 3.0);
    auto side = [&]() {
        std::vector<WeightedAtom> out;
        out.reserve(atoms);
        for (std::size_t k = 0; k < atoms; ++k) {
            double position = 0.0;
            if (rng.uniform() < 0.5) {
                position = rng.uniform(-4.0, 4.0);
            } else {
                position = centers[rng.below(3)] + 0.05 * rng.normal();
            }
            out.push_back({position, rng.uniform(0.1, 1.0), rng.normal()});
        }
        // an occasional atom that will be heavy for the larger n
        if (rng.uniform() < 0.5) out[rng.below(atoms)].weight = 0.5 * std::sqrt(static_cast<double>(atoms));
        std::sort(out.begin(), out.end(),
                  [](const WeightedAtom& a, const WeightedAtom& b) { return a.position < b.position; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const WeightedAtom& a, const WeightedAtom& b) { return a.position == b.position; }),
                  out.end());
        return out;
    };
    auto x = side();
    auto y = side();
    return WeightedKernelOperator::from_atoms(std::move(x), std::move(y), f);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// f(A) - f(B), after checking the Birman-Solomyak identity on (A, B).
struct CheckedDelta {
    Matrix delta;
    double residual;
    double tolerance;
};

CheckedDelta checked_delta(const LipschitzFunction& f, const SymmetricMatrix& a, const SymmetricMatrix& b,
                           const SpectralDecomposition& da, const SpectralDecomposition& db) {
    CheckedDelta out{f_delta(f, da, db), 0.0, birman_solomyak_tolerance(f, a, b)};
    out.residual = frobenius_norm(out.delta - doi_apply(f, da, db, a.matrix() - b.matrix()));
    if (!(out.residual <= out.tolerance)) {
        throw ContractViolation("Birman-Solomyak residual " + text::format_double(out.residual) + " exceeds " +
                                text::format_double(out.tolerance) + " for f = " + f.name() + " at dim " +
                                std::to_string(a.dim()));
    }
    return out;
}

ExperimentReport new_report(const SweepConfig& cfg, std::vector<std::string> columns,
                            std::vector<std::string> primary) {
    ExperimentReport r;
    r.experiment = to_string(cfg.experiment);
    r.scenario = to_string(cfg.scenario);
    r.seed = cfg.seed;
    r.columns = std::move(columns);
    r.primary_columns = std::move(primary);
    return r;
}

void add_decay(ExperimentReport& report, const std::string& f, std::size_t d, std::size_t instance,
               const SingularSpectrum& s, double scale = 1.0) {
    if (instance != 0) return;
    DecayCurve c{f, d, instance, {}};
    c.singular_values.reserve(s.size());
    for (double v : s.values()) c.singular_values.push_back(v / scale);
    report.decay.push_back(std::move(c));
}

void check_finite(const ReportRow& row) {
    for (double v : row.values)
        if (!std::isfinite(v)) throw ContractViolation("non-finite value in report row for " + row.function);
}

// rank-one T = a b^T in the bases of d1, d2: (U^T a)(V^T b)^T
Matrix rank_one_core(const Matrix& l, const SpectralDecomposition& d1, const SpectralDecomposition& d2,
                     std::span<const double> a, std::span<const double> b, double scale) {
    const Matrix ut = d1.frame().transposed();
    const Matrix vt = d2.frame().transposed();
    const auto ua = matvec(ut, a);
    const auto vb = matvec(vt, b);
    Matrix core(l.rows(), l.cols());
    for (std::size_t i = 0; i < l.rows(); ++i) {
        auto row = core.row(i);
        const auto lrow = l.row(i);
        for (std::size_t j = 0; j < l.cols(); ++j) row[j] = scale * lrow[j] * ua[i] * vb[j];
    }
    return core;
}

}  // namespace

ExperimentReport run_rank_one_sweep(const SweepConfig& cfg) {
    validate(cfg);
    const auto functions = cfg.build_functions();
    ExperimentReport report =
        new_report(cfg, {"rho", "rho_doi", "weak", "weak_doi", "norm_diff", "bs_residual", "bs_tolerance"},
                   {"rho", "rho_doi"});
    for (std::size_t d : cfg.dimensions) {
        for (std::size_t k = 0; k < cfg.ensemble; ++k) {
            CounterRng rng(derive_seed(cfg.seed, {d, k}));
            SymmetricMatrix a;
            std::vector<double> u;
            if (cfg.scenario == Scenario::Degenerate) {
                Matrix q;
                a = random_degenerate_symmetric(d, rng, &q);
                u = q.column(rng.below(d));
            } else {
                a = random_symmetric(d, rng);
                u = random_unit_vector(d, rng);
            }
            const double c = cfg.c ? *cfg.c : rng.sign() * (0.5 + rng.uniform());
            a = SymmetricMatrix(cfg.scale * a.matrix());
            const SymmetricMatrix b = rank_one_perturb(a, u, cfg.scale * c);
            const double norm_diff = std::abs(cfg.scale * c) * dot(u, u);

            // DOI variant: independent second operator, random rank-one T
            SymmetricMatrix a2 = cfg.scenario == Scenario::Degenerate ? random_degenerate_symmetric(d, rng)
                                                                       : random_symmetric(d, rng);
            a2 = SymmetricMatrix(cfg.scale * a2.matrix());
            const auto ta = random_unit_vector(d, rng);
            const auto tb = random_unit_vector(d, rng);
            const double t_norm = cfg.scale * norm2(ta) * norm2(tb);

            const auto da = eigh_symmetric(a);
            const auto db = eigh_symmetric(b);
            const auto da2 = eigh_symmetric(a2);
            for (const LipschitzFunction& f : functions) {
                const CheckedDelta cd = checked_delta(f, a, b, da, db);
                const auto s = singular_values(cd.delta);
                const double weak = weak_s1_quasinorm(s);
                const Matrix l = loewner_matrix(f, da.eigenvalues(), da2.eigenvalues());
                const auto s_doi = singular_values(rank_one_core(l, da, da2, ta, tb, cfg.scale));
                const double weak_doi = weak_s1_quasinorm(s_doi);
                const double den = f.lip() * norm_diff;
                ReportRow row{f.name(), d, k, den == 0.0,
                              {ratio(weak, den), ratio(weak_doi, f.lip() * t_norm), weak, weak_doi, norm_diff,
                               cd.residual, cd.tolerance}};
                check_finite(row);
                report.rows.push_back(std::move(row));
                add_decay(report, f.name(), d, k, s);
            }
        }
    }
    summarize(report);
    return report;
}

namespace {

ExperimentReport run_doi_family(const SweepConfig& cfg, std::vector<std::string> primary) {
    validate(cfg);
    const auto functions = cfg.build_functions();
    ExperimentReport report = new_report(cfg,
                                         {"rho_Omega", "rho_matsaev", "rho_interp", "rho_pp", "s_Omega", "op_norm",
                                          "s1_T", "s_omega_T", "bs_residual", "bs_tolerance"},
                                         std::move(primary));
    const double q = cfg.p + cfg.epsilon;
    for (std::size_t d : cfg.dimensions) {
        for (std::size_t k = 0; k < cfg.ensemble; ++k) {
            CounterRng rng(derive_seed(cfg.seed, {d, k}));
            const bool degenerate = cfg.scenario == Scenario::Degenerate;
            const SymmetricMatrix a1 = degenerate ? random_degenerate_symmetric(d, rng) : random_symmetric(d, rng);
            const SymmetricMatrix a2 = degenerate ? random_degenerate_symmetric(d, rng) : random_symmetric(d, rng);
            TraceClassSample sample = sample_trace_class(d, rng);
            sample.t *= cfg.scale;
            const SingularSpectrum s_t =
                SingularSpectrum::from_unsorted(std::vector<double>(sample.sigma.begin(), sample.sigma.end()))
                    .scaled(cfg.scale);
            const double s1_t = schatten_norm(s_t, 1.0);
            const double sp_t = schatten_norm(s_t, cfg.p);
            const double omega_t = s_omega_norm(s_t);

            const auto d1 = eigh_symmetric(a1);
            const auto d2 = eigh_symmetric(a2);
            const Matrix conj = matmul(matmul_tn(d1.frame(), sample.t), d2.frame());
            for (const LipschitzFunction& f : functions) {
                const CheckedDelta cd = checked_delta(f, a1, a2, d1, d2);
                const Matrix l = loewner_matrix(f, d1.eigenvalues(), d2.eigenvalues());
                const auto s = singular_values(hadamard(conj, l));
                const double lip = f.lip();
                const double omega = s_Omega_norm(s);
                const double op = s.at_or_zero(0);
                ReportRow row{f.name(),
                              d,
                              k,
                              lip == 0.0 || s1_t == 0.0,
                              {ratio(omega, lip * s1_t), ratio(op, lip * omega_t),
                               ratio(schatten_norm(s, q), lip * sp_t), ratio(schatten_norm(s, cfg.p), lip * sp_t),
                               omega, op, s1_t, omega_t, cd.residual, cd.tolerance}};
                check_finite(row);
                report.rows.push_back(std::move(row));
                add_decay(report, f.name(), d, k, s);
            }
        }
    }
    summarize(report);
    return report;
}

}  // namespace

ExperimentReport run_trace_class_sweep(const SweepConfig& cfg) { return run_doi_family(cfg, {"rho_Omega"}); }
ExperimentReport run_matsaev_sweep(const SweepConfig& cfg) { return run_doi_family(cfg, {"rho_matsaev"}); }
ExperimentReport run_interp_sweep(const SweepConfig& cfg) { return run_doi_family(cfg, {"rho_interp"}); }

ExperimentReport run_certificate_sweep(const SweepConfig& cfg) {
    validate(cfg);
    const auto functions = cfg.build_functions();
    ExperimentReport report = new_report(cfg,
                                         {"K_cert", "K_direct", "K_direct_first", "K_direct_last", "weak_norm",
                                          "weak_constant", "max_rank_per_n", "max_b"},
                                         {"K_cert", "K_direct"});
    for (std::size_t atoms : cfg.dimensions) {
        for (std::size_t k = 0; k < cfg.ensemble; ++k) {
            CounterRng rng(derive_seed(cfg.seed, {atoms, k}));
            const WeightedKernelOperator base = random_kernel_operator(atoms, functions.front(), rng);
            for (const LipschitzFunction& f : functions) {
                const WeightedKernelOperator kop = base.with_function(f);
                const auto spectrum = singular_values(materialize(kop));
                double k_cert = 0.0, k_direct = 0.0, k_first = 0.0, k_last = 0.0;
                double weak_constant = std::numeric_limits<double>::infinity();
                double max_rank = 0.0, max_b = 0.0, weak_norm = 0.0, scale = 1.0;
                for (std::size_t idx = 0; idx < cfg.n_values.size(); ++idx) {
                    const std::size_t n = cfg.n_values[idx];
                    const WeakDecayCertificate cert = build_certificate(kop, n, {cfg.truncation, false, false});
                    const VerificationReport rep = verify_certificate(spectrum, cert);
                    scale = cert.scale;
                    weak_norm = rep.weak_norm;
                    const double nd = static_cast<double>(n);
                    const double direct = nd * spectrum.at_or_zero(7 * n) / cert.scale;
                    k_cert = std::max(k_cert, nd * cert.empirical_bound);
                    k_direct = std::max(k_direct, direct);
                    if (idx == 0) k_first = direct;
                    if (idx + 1 == cfg.n_values.size()) k_last = direct;
                    weak_constant = std::min(weak_constant, cert.weak_constant);
                    max_rank = std::max(max_rank, static_cast<double>(cert.defect_rank) / nd);
                    max_b = std::max(max_b, cert.empirical_bound);
                }
                ReportRow row{f.name(),
                              atoms,
                              k,
                              f.lip() == 0.0,
                              {k_cert, k_direct, k_first, k_last, weak_norm, weak_constant, max_rank, max_b}};
                check_finite(row);
                report.rows.push_back(std::move(row));
                add_decay(report, f.name(), atoms, k, spectrum, scale);
            }
        }
    }
    summarize(report);
    return report;
}

ExperimentReport run_sweep(const SweepConfig& cfg) {
    switch (cfg.experiment) {
        case ExperimentKind::RankOne: return run_rank_one_sweep(cfg);
        case ExperimentKind::TraceClass: return run_trace_class_sweep(cfg);
        case ExperimentKind::Matsaev: return run_matsaev_sweep(cfg);
        case ExperimentKind::Interp: return run_interp_sweep(cfg);
        case ExperimentKind::Certificate: return run_certificate_sweep(cfg);
    }
    throw InvalidInput("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + path + "'");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "experiment,function,dimension,instance,degenerate";
    for (const auto& c : report.columns) out << ',' << csv_field(c);
    out << '\n';
    for (const ReportRow& r : report.rows) {
        out << csv_field(report.experiment) << ',' << csv_field(r.function) << ',' << r.dimension << ','
            << r.instance << ',' << (r.degenerate ? 1 : 0);
        for (double v : r.values) out << ',' << text::format_double(v);
        out << '\n';
    }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
    out << "function,column,dimension,max,growth,bounded\n";
    for (const SummaryEntry& e : report.summary) {
        out << csv_field(e.function) << ',' << csv_field(e.column) << ',' << e.dimension << ','
            << text::format_double(e.max) << ',' << text::format_double(e.growth) << ',' << (e.bounded ? 1 : 0)
            << '\n';
    }
}

void write_decay_csv(std::ostream& out, const ExperimentReport& report) {
    out << "function,dimension,instance,j,s_j,weighted\n";
    for (const DecayCurve& c : report.decay) {
        for (std::size_t j = 0; j < c.singular_values.size(); ++j) {
            const double s = c.singular_values[j];
            out << csv_field(c.function) << ',' << c.dimension << ',' << c.instance << ',' << j << ','
                << text::format_double(s) << ',' << text::format_double(static_cast<double>(j + 1) * s) << '\n';
        }
    }
}

nlohmann::json report_to_json(const ExperimentReport& report) {
    json j;
    j["experiment"] = report.experiment;
    j["scenario"] = report.scenario;
    j["seed"] = report.seed;
    j["columns"] = report.columns;
    j["primary_columns"] = report.primary_columns;
    j["rows"] = json::array();
    for (const ReportRow& r : report.rows) {
        j["rows"].push_back({{"function", r.function},
                             {"dimension", r.dimension},
                             {"instance", r.instance},
                             {"degenerate", r.degenerate},
                             {"values", r.values}});
    }
    j["summary"] = json::array();
    for (const SummaryEntry& e : report.summary) {
        j["summary"].push_back({{"function", e.function},
                                {"column", e.column},
                                {"dimension", e.dimension},
                                {"max", e.max},
                                {"growth", e.growth},
                                {"bounded", e.bounded}});
    }
    j["decay"] = json::array();
    for (const DecayCurve& c : report.decay) {
        j["decay"].push_back({{"function", c.function},
                              {"dimension", c.dimension},
                              {"instance", c.instance},
                              {"singular_values", c.singular_values}});
    }
    return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        ExperimentReport r;
        r.experiment = j.at("experiment").get<std::string>();
        r.scenario = j.at("scenario").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.columns = j.at("columns").get<std::vector<std::string>>();
        r.primary_columns = j.at("primary_columns").get<std::vector<std::string>>();
        for (const auto& row : j.at("rows")) {
            ReportRow rr{row.at("function").get<std::string>(), row.at("dimension").get<std::size_t>(),
                         row.at("instance").get<std::size_t>(), row.at("degenerate").get<bool>(),
                         row.at("values").get<std::vector<double>>()};
            if (rr.values.size() != r.columns.size()) throw InvalidInput("report: row width differs from columns");
            r.rows.push_back(std::move(rr));
        }
        for (const auto& e : j.at("summary")) {
            r.summary.push_back({e.at("function").get<std::string>(), e.at("column").get<std::string>(),
                                 e.at("dimension").get<std::size_t>(), e.at("max").get<double>(),
                                 e.at("growth").get<double>(), e.at("bounded").get<bool>()});
        }
        for (const auto& c : j.at("decay")) {
            r.decay.push_back({c.at("function").get<std::string>(), c.at("dimension").get<std::size_t>(),
                               c.at("instance").get<std::size_t>(),
                               c.at("singular_values").get<std::vector<double>>()});
        }
        return r;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("report: malformed JSON document: ") + e.what());
    }
}

void write_report_json(std::ostream& out, const ExperimentReport& report) {
    out << report_to_json(report).dump(2) << '\n';
}

ExperimentReport read_report_json(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("report: invalid JSON: ") + e.what());
    }
    return report_from_json(j);
}

void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
    if (path.empty()) throw InvalidInput("emit_report: empty output path");
    auto out = open_output(path);
    if (format == ReportFormat::Json) {
        write_report_json(out, report);
        finish_output(out, path);
        return;
    }
    write_report_csv(out, report);
    finish_output(out, path);
    const std::string summary_path = path + ".summary.csv";
    auto summary = open_output(summary_path);
    write_summary_csv(summary, report);
    finish_output(summary, summary_path);
    const std::string decay_path = path + ".decay.csv";
    auto decay = open_output(decay_path);
    write_decay_csv(decay, report);
    finish_output(decay, decay_path);
}

}  // namespace lipdoi
