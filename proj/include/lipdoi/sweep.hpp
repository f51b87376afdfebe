#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipdoi/calculus.hpp"
#include "lipdoi/certificate.hpp"
#include "lipdoi/random.hpp"

namespace lipdoi {

enum class ExperimentKind { RankOne, TraceClass, Matsaev, Interp, Certificate };
enum class Scenario { Generic, Degenerate };
enum class ReportFormat { Csv, Json };

std::string to_string(ExperimentKind kind);
std::string to_string(Scenario scenario);
std::string to_string(ReportFormat format);
ExperimentKind parse_experiment_kind(const std::string& s);
ReportFormat parse_report_format(const std::string& s);

struct SweepConfig {
    ExperimentKind experiment = ExperimentKind::RankOne;
    // Matrix dimensions; for the certificate sweep, atoms per side.
    std::vector<std::size_t> dimensions;
    std::size_t ensemble = 1;
    std::uint64_t seed = 0;
    // Function specs as given in the config (a kind name or a spec object).
    std::vector<nlohmann::json> functions;
    double p = 1.0;
    double epsilon = 0.5;
    std::string output;
    ReportFormat format = ReportFormat::Csv;
    std::vector<std::size_t> n_values{4, 8, 16, 32, 64};
    Scenario scenario = Scenario::Generic;
    // Rank-one sweep: fixed coefficient c instead of a random +-(0.5 + U).
    std::optional<double> c;
    // Multiplies A and c (rank-one) or T (the other matrix sweeps).
    double scale = 1.0;
    // Certificate sweep truncation mode.
    TruncationMode truncation = TruncationMode::Exact;

    std::vector<LipschitzFunction> build_functions() const;
};

// Validates every field; throws InvalidInput / InvalidParameter. Unknown keys
// are rejected.
SweepConfig parse_sweep_config(const nlohmann::json& j);
SweepConfig read_sweep_config_file(const std::string& path);
void validate(const SweepConfig& cfg);

struct ReportRow {
    std::string function;
    std::size_t dimension = 0;
    std::size_t instance = 0;
    // A zero denominator: the ratios of the row are reported as 0.
    bool degenerate = false;
    std::vector<double> values;  // aligned with ExperimentReport::columns

    bool operator==(const ReportRow&) const = default;
};

struct SummaryEntry {
    std::string function;
    std::string column;
    std::size_t dimension = 0;
    double max = 0.0;
    // max at this dimension / max at the smallest dimension (1 if that is 0)
    double growth = 1.0;
    bool bounded = true;  // growth <= kBoundednessFactor

    bool operator==(const SummaryEntry&) const = default;
};

struct DecayCurve {
    std::string function;
    std::size_t dimension = 0;
    std::size_t instance = 0;
    std::vector<double> singular_values;

    bool operator==(const DecayCurve&) const = default;
};

inline constexpr double kBoundednessFactor = 1.5;

struct ExperimentReport {
    std::string experiment;
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<std::string> columns;
    // Ratio columns whose growth across dimensions is summarized.
    std::vector<std::string> primary_columns;
    std::vector<ReportRow> rows;
    std::vector<SummaryEntry> summary;
    std::vector<DecayCurve> decay;

    std::size_t column_index(const std::string& name) const;
    // Max of column over rows with this function and dimension.
    double max_value(const std::string& function, const std::string& column, std::size_t dimension) const;
    // max at the largest dimension <= kBoundednessFactor * max at the smallest.
    bool bounded(const std::string& function, const std::string& column) const;
    std::vector<std::string> function_names() const;

    bool operator==(const ExperimentReport&) const = default;
};

// Fills report.summary from report.rows and report.primary_columns.
void summarize(ExperimentReport& report);

// Ensembles
// Upper triangle N(0, 1/d), mirrored.
SymmetricMatrix random_symmetric(std::size_t d, CounterRng& rng);
// Haar orthogonal matrix from Householder QR of a Gaussian matrix.
Matrix random_orthogonal(std::size_t d, CounterRng& rng);
std::vector<double> random_unit_vector(std::size_t d, CounterRng& rng);
// Q diag(levels drawn from {-1, 0, 1}) Q^T: every eigenvalue is repeated.
SymmetricMatrix random_degenerate_symmetric(std::size_t d, CounterRng& rng, Matrix* frame = nullptr);
// Q1 diag(sigma) Q2^T with sigma_j = U_j / (1 + j) sorted and scaled so that
// ||T||_{S_1} = 1.
Matrix random_trace_class(std::size_t d, CounterRng& rng);
// Random atoms on both sides (clustered and spread positions, Gaussian
// weights, an occasional heavy atom).
WeightedKernelOperator random_kernel_operator(std::size_t atoms, const LipschitzFunction& f, CounterRng& rng);

// Sweeps. Rows are ordered by dimension, then instance, then function; every
// instance passes the Birman-Solomyak residual check before it is reported.
ExperimentReport run_rank_one_sweep(const SweepConfig& cfg);
// The three DOI sweeps share one ensemble and measure every functional; they
// differ in their primary ratio columns.
ExperimentReport run_trace_class_sweep(const SweepConfig& cfg);
ExperimentReport run_matsaev_sweep(const SweepConfig& cfg);
ExperimentReport run_interp_sweep(const SweepConfig& cfg);
// Throws CertificateUnsound if any certificate fails verification.
ExperimentReport run_certificate_sweep(const SweepConfig& cfg);
ExperimentReport run_sweep(const SweepConfig& cfg);

// CSV writes the rows to `path`, the summary to `path.summary.csv` and the
// decay curves to `path.decay.csv`. JSON writes one document.
void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format);
void write_report_csv(std::ostream& out, const ExperimentReport& report);
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
void write_decay_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
void write_report_json(std::ostream& out, const ExperimentReport& report);
ExperimentReport read_report_json(std::istream& in);

}  // namespace lipdoi
