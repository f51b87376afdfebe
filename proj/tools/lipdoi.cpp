// Command-line front end: f(A) - f(B), double operator integrals, the
// Birman-Solomyak check, weak-decay certificates and experiment sweeps.
//
// Exit codes: 0 success, 1 failed check or internal error, 2 invalid input,
// 3 unsound certificate.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lipdoi/certificate.hpp"
#include "lipdoi/doi.hpp"
#include "lipdoi/error.hpp"
#include "lipdoi/ideals.hpp"
#include "lipdoi/matrix_io.hpp"
#include "lipdoi/sweep.hpp"
#include "lipdoi/text_format.hpp"

namespace {

using namespace lipdoi;

constexpr int kExitFailedCheck = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitUnsound = 3;

SymmetricMatrix read_symmetric(const std::string& path) {
    const Matrix m = read_matrix_file(path);
    if (!m.is_square()) throw InvalidInput(path + ": matrix is not square");
    const double tol = 1e-12 * (1.0 + max_abs(m));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) throw InvalidInput(path + ": matrix is not symmetric");
    return SymmetricMatrix(m);
}

void write_matrix_to(const std::string& path, const Matrix& m) {
    if (path.empty() || path == "-") {
        write_matrix(std::cout, m);
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file '" + path + "'");
    write_matrix(out, m);
    if (!out.flush()) throw IoError("error writing '" + path + "'");
}

struct MatrixArgs {
    std::string function = "abs";
    std::string a;
    std::string b;
    std::string out;
};

void add_matrix_args(CLI::App* cmd, MatrixArgs& args) {
    cmd->add_option("-f,--function", args.function, "function spec: kind name or JSON object")
        ->capture_default_str();
    cmd->add_option("-a,--a", args.a, "matrix file for A")->required();
    cmd->add_option("-b,--b", args.b, "matrix file for B")->required();
}

int run_fdelta(const MatrixArgs& args) {
    const LipschitzFunction f = function_from_string(args.function);
    const SymmetricMatrix a = read_symmetric(args.a);
    const SymmetricMatrix b = read_symmetric(args.b);
    write_matrix_to(args.out, f_delta(f, a, b));
    return 0;
}

int run_doi(const MatrixArgs& args, const std::string& t_path) {
    const LipschitzFunction f = function_from_string(args.function);
    const SymmetricMatrix a = read_symmetric(args.a);
    const SymmetricMatrix b = read_symmetric(args.b);
    const Matrix t = read_matrix_file(t_path);
    write_matrix_to(args.out, doi_apply(f, eigh_symmetric(a), eigh_symmetric(b), t));
    return 0;
}

int run_bscheck(const MatrixArgs& args) {
    const LipschitzFunction f = function_from_string(args.function);
    const SymmetricMatrix a = read_symmetric(args.a);
    const SymmetricMatrix b = read_symmetric(args.b);
    if (a.dim() != b.dim()) throw InvalidInput("bscheck: A and B differ in dimension");
    const double residual = check_birman_solomyak(f, a, b);
    const double tolerance = birman_solomyak_tolerance(f, a, b);
    const bool ok = residual <= tolerance;
    std::cout << "residual " << text::format_double(residual) << "\n"
              << "tolerance " << text::format_double(tolerance) << "\n"
              << (ok ? "ok" : "FAIL") << "\n";
    return ok ? 0 : kExitFailedCheck;
}

struct CertifyArgs {
    std::string measure;
    std::vector<std::size_t> n_values{4, 8, 16, 32, 64};
    std::string function;
    std::string truncation = "exact";
    bool with_defects = false;
    std::string out;
};

int run_certify(const CertifyArgs& args) {
    const MeasureInput input = read_measure_file(args.measure);
    std::string spec = args.function;
    if (spec.empty()) spec = input.function_spec.value_or("");
    if (spec.empty()) throw InvalidInput("certify: no function given (use --function or a FUNCTION line)");
    const LipschitzFunction f = function_from_string(spec);
    const auto kop = WeightedKernelOperator::from_atoms(input.mu, input.nu, f);

    CertificateOptions options;
    options.keep_defect_vectors = args.with_defects;
    if (args.truncation == "doubling") {
        options.truncation = TruncationMode::Doubling;
    } else if (args.truncation != "exact") {
        throw InvalidInput("certify: --truncation must be exact or doubling");
    }
    for (std::size_t n : args.n_values)
        if (n == 0) throw InvalidParameter("certify: n must be >= 1");

    std::ofstream file;
    if (!args.out.empty() && args.out != "-") {
        file.open(args.out);
        if (!file) throw IoError("cannot open output file '" + args.out + "'");
    }
    std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;

    const auto spectrum = singular_values(materialize(kop));
    out << "function " << f.name() << "\n";
    bool sound = true;
    for (std::size_t n : args.n_values) {
        const WeakDecayCertificate cert = build_certificate(kop, n, options);
        const VerificationReport rep = check_certificate(spectrum, cert);
        out << "certificate\n";
        write_certificate(out, cert, args.with_defects);
        write_verification(out, rep);
        sound = sound && rep.sound();
        if (!rep.sound()) {
            try {
                verify_certificate(spectrum, cert);
            } catch (const CertificateUnsound& e) {
                std::cerr << "lipdoi: n = " << n << ": " << e.what() << "\n";
            }
        }
    }
    if (!out.flush()) throw IoError("error writing certificate output");
    return sound ? 0 : kExitUnsound;
}

struct SweepArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
};

int run_sweep_command(const SweepArgs& args) {
    SweepConfig cfg = read_sweep_config_file(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.out.empty()) cfg.output = args.out;
    if (!args.format.empty()) cfg.format = parse_report_format(args.format);
    if (cfg.output.empty()) throw InvalidInput("sweep: no output path (set 'output' in the config or pass --out)");
    const ExperimentReport report = run_sweep(cfg);
    emit_report(report, cfg.output, cfg.format);
    for (const SummaryEntry& e : report.summary) {
        std::cerr << e.function << " " << e.column << " dim " << e.dimension << " max "
                  << text::format_double(e.max) << "\n";
    }
    return 0;
}

int run_ideals(const std::string& path, double p) {
    const SingularSpectrum s = read_spectrum_file(path);
    std::cout << "schatten_p " << text::format_double(schatten_norm(s, p)) << "\n"
              << "weak_s1 " << text::format_double(weak_s1_quasinorm(s)) << "\n"
              << "s_Omega " << text::format_double(s_Omega_norm(s)) << "\n"
              << "s_omega " << text::format_double(s_omega_norm(s)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lipschitz functions of perturbed self-adjoint matrices"};
    app.require_subcommand(1);

    MatrixArgs fdelta_args;
    auto* fdelta = app.add_subcommand("fdelta", "write f(A) - f(B)");
    add_matrix_args(fdelta, fdelta_args);
    fdelta->add_option("-o,--out", fdelta_args.out, "output matrix file (default stdout)");

    MatrixArgs doi_args;
    std::string t_path;
    auto* doi = app.add_subcommand("doi", "write the double operator integral of T over eigh(A), eigh(B)");
    add_matrix_args(doi, doi_args);
    doi->add_option("-t,--t", t_path, "matrix file for T")->required();
    doi->add_option("-o,--out", doi_args.out, "output matrix file (default stdout)");

    MatrixArgs bs_args;
    auto* bscheck = app.add_subcommand("bscheck", "check f(A) - f(B) against the DOI of A - B");
    add_matrix_args(bscheck, bs_args);

    CertifyArgs cert_args;
    auto* certify = app.add_subcommand("certify", "build and verify weak-decay certificates");
    certify->add_option("-m,--measure", cert_args.measure, "measure file (MU / NU sections)")->required();
    certify->add_option("-n,--n", cert_args.n_values, "values of n")->delimiter(',')->capture_default_str();
    certify->add_option("-f,--function", cert_args.function, "function spec; overrides the FUNCTION line");
    certify->add_option("--truncation", cert_args.truncation, "exact or doubling")->capture_default_str();
    certify->add_flag("--with-defects", cert_args.with_defects, "include defect vectors in the record");
    certify->add_option("-o,--out", cert_args.out, "output file (default stdout)");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run an experiment sweep from a JSON config");
    sweep->add_option("-c,--config", sweep_args.config, "config file")->required();
    sweep->add_option("--seed", sweep_args.seed, "override the config seed");
    sweep->add_option("-o,--out", sweep_args.out, "override the output path");
    sweep->add_option("--format", sweep_args.format, "override the format (csv or json)");

    std::string spectrum_path;
    double p = 1.0;
    auto* ideals = app.add_subcommand("ideals", "evaluate ideal functionals of a spectrum file");
    ideals->add_option("-s,--spectrum", spectrum_path, "spectrum file")->required();
    ideals->add_option("-p,--p", p, "Schatten exponent")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*fdelta) return run_fdelta(fdelta_args);
        if (*doi) return run_doi(doi_args, t_path);
        if (*bscheck) return run_bscheck(bs_args);
        if (*certify) return run_certify(cert_args);
        if (*sweep) return run_sweep_command(sweep_args);
        if (*ideals) return run_ideals(spectrum_path, p);
    } catch (const CertificateUnsound& e) {
        std::cerr << "lipdoi: " << e.what() << "\n";
        return kExitUnsound;
    } catch (const InvalidInput& e) {
        std::cerr << "lipdoi: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "lipdoi: " << e.what() << "\n";
        return kExitFailedCheck;
    }
    return 0;
}
