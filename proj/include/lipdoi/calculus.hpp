#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lipdoi/linalg.hpp"

namespace lipdoi {

// A real function together with a certified Lipschitz seminorm. The declared
// lip is exact for every built-in member; it is the source of truth, and
// estimate_lip_seminorm() is only a cross-check.
class LipschitzFunction {
public:
    using Rule = std::function<double(double)>;

    LipschitzFunction(std::string name, Rule rule, double lip);

    const std::string& name() const noexcept { return name_; }
    double lip() const noexcept { return lip_; }
    double operator()(double x) const { return rule_(x); }

    // c * f, with seminorm |c| * lip.
    LipschitzFunction scaled(double c) const;

private:
    std::string name_;
    Rule rule_;
    double lip_;
};

namespace functions {

LipschitzFunction abs();
// x -> |x - t|
LipschitzFunction shifted_abs(double t);
// x -> min(hi, max(lo, x)); default clamps to [-1, 1].
LipschitzFunction clamp(double lo = -1.0, double hi = 1.0);
// Continuous piecewise-linear function, zero at the first breakpoint, whose
// slope on each of the breakpoints.size() + 1 pieces is an independent +-1
// drawn from CounterRng(seed). lip = 1.
LipschitzFunction pwl(std::vector<double> breakpoints, std::uint64_t seed);
// Uniform breakpoint grid of `count` points on [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, std::size_t count);
// x -> sqrt(x^2 + delta^2), lip = 1.
LipschitzFunction smooth_ramp(double delta);
LipschitzFunction identity();
LipschitzFunction constant(double c);
// x -> a x + b
LipschitzFunction affine(double a, double b);

}  // namespace functions

// Builds a suite member from a config object
//   {"kind": "abs" | "shifted_abs" | "clamp" | "pwl" | "smooth_ramp"
//            | "identity" | "constant" | "affine", parameters...}
// Throws InvalidInput on unknown kinds or bad parameters.
LipschitzFunction function_from_json(const nlohmann::json& spec);
// Accepts either a JSON object or a bare kind name ("abs").
LipschitzFunction function_from_string(const std::string& spec);

// Spectral calculus: frame * diag(f(lambda)) * frame^T.
// Throws EvaluationError if f is not finite at an eigenvalue.
SymmetricMatrix apply_function(const LipschitzFunction& f, const SpectralDecomposition& d);

// (f(x) - f(y)) / (x - y), exactly 0 on the diagonal x == y. The result is
// clamped to [-lip, lip], which the exact value always satisfies.
double divided_difference(const LipschitzFunction& f, double x, double y);
// Same, from precomputed values fx = f(x), fy = f(y).
double divided_difference(double fx, double fy, double x, double y, double lip) noexcept;

// entry(i, j) = divided_difference(f, xs[i], ys[j]).
Matrix loewner_matrix(const LipschitzFunction& f, std::span<const double> xs, std::span<const double> ys);

// Max slope over consecutive points of the sorted, deduplicated grid: a lower
// bound for ||f||_Lip. Requires at least two distinct grid points.
double estimate_lip_seminorm(const LipschitzFunction& f, std::span<const double> grid);

}  // namespace lipdoi
