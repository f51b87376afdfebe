#include "lipdoi/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lipdoi/error.hpp"
#include "lipdoi/random.hpp"
#include "lipdoi/text_format.hpp"

namespace lipdoi {

LipschitzFunction::LipschitzFunction(std::string name, Rule rule, double lip)
    : name_(std::move(name)), rule_(std::move(rule)), lip_(lip) {
    if (!rule_) throw InvalidInput("LipschitzFunction: empty evaluation rule");
    if (!(lip >= 0.0) || !std::isfinite(lip)) throw InvalidParameter("LipschitzFunction: lip must be finite and >= 0");
}

LipschitzFunction LipschitzFunction::scaled(double c) const {
    if (!std::isfinite(c)) throw InvalidParameter("LipschitzFunction::scaled: non-finite factor");
    return LipschitzFunction(name_, [rule = rule_, c](double x) { return c * rule(x); }, std::abs(c) * lip_);
}

namespace functions {

LipschitzFunction abs() {
    return LipschitzFunction("abs", [](double x) { return std::abs(x); }, 1.0);
}

LipschitzFunction shifted_abs(double t) {
    if (!std::isfinite(t)) throw InvalidParameter("shifted_abs: shift must be finite");
    return LipschitzFunction("shifted_abs(" + text::format_double(t) + ")", [t](double x) { return std::abs(x - t); },
                             1.0);
}

LipschitzFunction clamp(double lo, double hi) {
    if (!(lo < hi)) throw InvalidParameter("clamp: need lo < hi");
    return LipschitzFunction("clamp", [lo, hi](double x) { return std::min(hi, std::max(lo, x)); }, 1.0);
}

LipschitzFunction pwl(std::vector<double> breakpoints, std::uint64_t seed) {
    for (double b : breakpoints)
        if (!std::isfinite(b)) throw InvalidParameter("pwl: non-finite breakpoint");
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    CounterRng rng(seed);
    std::vector<double> slopes(breakpoints.size() + 1);
    for (double& s : slopes) s = rng.sign();
    // knot values, f(breakpoints[0]) = 0
    std::vector<double> knots(breakpoints.size(), 0.0);
    for (std::size_t k = 1; k < breakpoints.size(); ++k) {
        knots[k] = knots[k - 1] + slopes[k] * (breakpoints[k] - breakpoints[k - 1]);
    }
    auto rule = [bp = std::move(breakpoints), slopes = std::move(slopes), knots = std::move(knots)](double x) {
        if (bp.empty()) return slopes[0] * x;
        if (x < bp.front()) return slopes[0] * (x - bp.front());
        // k = index of last breakpoint <= x
        const auto it = std::upper_bound(bp.begin(), bp.end(), x);
        const std::size_t k = static_cast<std::size_t>(it - bp.begin()) - 1;
        return knots[k] + slopes[k + 1] * (x - bp[k]);
    };
    return LipschitzFunction("pwl(seed=" + std::to_string(seed) + ")", std::move(rule), 1.0);
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {0.5 * (lo + hi)};
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    return g;
}

LipschitzFunction smooth_ramp(double delta) {
    if (!std::isfinite(delta)) throw InvalidParameter("smooth_ramp: delta must be finite");
    return LipschitzFunction("smooth_ramp(" + text::format_double(delta) + ")",
                             [delta](double x) { return std::hypot(x, delta); }, 1.0);
}

LipschitzFunction identity() {
    return LipschitzFunction("identity", [](double x) { return x; }, 1.0);
}

LipschitzFunction constant(double c) {
    return LipschitzFunction("constant(" + text::format_double(c) + ")", [c](double) { return c; }, 0.0);
}

LipschitzFunction affine(double a, double b) {
    return LipschitzFunction("affine(" + text::format_double(a) + "," + text::format_double(b) + ")",
                             [a, b](double x) { return a * x + b; }, std::abs(a));
}

}  // namespace functions

namespace {

double number_param(const nlohmann::json& spec, const char* key, double fallback) {
    if (!spec.contains(key)) return fallback;
    const auto& v = spec.at(key);
    if (!v.is_number()) throw InvalidInput(std::string("function spec: '") + key + "' must be a number");
    return v.get<double>();
}

bool nonnegative_integer(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

}  // namespace

LipschitzFunction function_from_json(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string()) {
        throw InvalidInput("function spec must be an object with a string 'kind'");
    }
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "abs") return functions::abs();
    if (kind == "shifted_abs") return functions::shifted_abs(number_param(spec, "t", 0.0));
    if (kind == "clamp") return functions::clamp(number_param(spec, "lo", -1.0), number_param(spec, "hi", 1.0));
    if (kind == "smooth_ramp") return functions::smooth_ramp(number_param(spec, "delta", 0.1));
    if (kind == "identity") return functions::identity();
    if (kind == "constant") return functions::constant(number_param(spec, "c", 0.0));
    if (kind == "affine") return functions::affine(number_param(spec, "a", 1.0), number_param(spec, "b", 0.0));
    if (kind == "pwl") {
        std::vector<double> breakpoints;
        if (spec.contains("breakpoints")) {
            const auto& bp = spec.at("breakpoints");
            if (!bp.is_array()) throw InvalidInput("function spec: 'breakpoints' must be an array");
            for (const auto& b : bp) {
                if (!b.is_number()) throw InvalidInput("function spec: breakpoints must be numbers");
                breakpoints.push_back(b.get<double>());
            }
        } else {
            const double count = number_param(spec, "count", 9.0);
            if (count < 0.0 || count != std::floor(count)) throw InvalidInput("function spec: 'count' must be a count");
            breakpoints = functions::uniform_grid(number_param(spec, "lo", -2.0), number_param(spec, "hi", 2.0),
                                                  static_cast<std::size_t>(count));
        }
        std::uint64_t seed = 0;
        if (spec.contains("seed")) {
            const auto& s = spec.at("seed");
            if (!nonnegative_integer(s)) throw InvalidInput("function spec: 'seed' must be a nonnegative integer");
            seed = s.get<std::uint64_t>();
        }
        return functions::pwl(std::move(breakpoints), seed);
    }
    throw InvalidInput("function spec: unknown kind '" + kind + "'");
}

LipschitzFunction function_from_string(const std::string& spec) {
    const std::string t = text::trim(spec);
    if (!t.empty() && t.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidInput(std::string("function spec: invalid JSON: ") + e.what());
        }
        return function_from_json(j);
    }
    return function_from_json(nlohmann::json{{"kind", t}});
}

SymmetricMatrix apply_function(const LipschitzFunction& f, const SpectralDecomposition& d) {
    std::vector<double> values(d.dim());
    for (std::size_t k = 0; k < d.dim(); ++k) {
        const double lambda = d.eigenvalues()[k];
        values[k] = f(lambda);
        if (!std::isfinite(values[k])) {
            std::ostringstream msg;
            msg << "function '" << f.name() << "' is not finite at eigenvalue " << text::format_double(lambda);
            throw EvaluationError(msg.str());
        }
    }
    // lip = 0 means f is constant; c * I avoids the frame's rounding
    if (f.lip() == 0.0 && d.dim() > 0) return SymmetricMatrix(values[0] * Matrix::identity(d.dim()));
    return SymmetricMatrix(d.synthesize(values));
}

double divided_difference(double fx, double fy, double x, double y, double lip) noexcept {
    if (x == y) return 0.0;
    const double q = (fx - fy) / (x - y);
    return std::clamp(q, -lip, lip);
}

double divided_difference(const LipschitzFunction& f, double x, double y) {
    if (x == y) return 0.0;
    return divided_difference(f(x), f(y), x, y, f.lip());
}

Matrix loewner_matrix(const LipschitzFunction& f, std::span<const double> xs, std::span<const double> ys) {
    std::vector<double> fx(xs.size()), fy(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = f(xs[i]);
    for (std::size_t j = 0; j < ys.size(); ++j) fy[j] = f(ys[j]);
    Matrix l(xs.size(), ys.size());
    const double lip = f.lip();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto row = l.row(i);
        for (std::size_t j = 0; j < ys.size(); ++j) row[j] = divided_difference(fx[i], fy[j], xs[i], ys[j], lip);
    }
    return l;
}

double estimate_lip_seminorm(const LipschitzFunction& f, std::span<const double> grid) {
    std::vector<double> g(grid.begin(), grid.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (g.size() < 2) throw InvalidParameter("estimate_lip_seminorm: grid needs at least 2 distinct points");
    double best = 0.0;
    double prev = f(g[0]);
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double cur = f(g[k]);
        best = std::max(best, std::abs(cur - prev) / (g[k] - g[k - 1]));
        prev = cur;
    }
    return best;
}

}  // namespace lipdoi
