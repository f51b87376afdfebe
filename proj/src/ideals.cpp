#include "lipdoi/ideals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lipdoi/error.hpp"
#include "lipdoi/text_format.hpp"

namespace lipdoi {

SingularSpectrum singular_spectrum(const Matrix& m) { return singular_values(m); }

double schatten_norm(const SingularSpectrum& s, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidParameter("schatten_norm: p must be a finite real >= 1");
    if (s.empty() || s[0] == 0.0) return 0.0;
    // Factor out s_0 so large p cannot overflow.
    const double top = s[0];
    double acc = 0.0;
    for (double v : s.values()) acc += std::pow(v / top, p);
    return top * std::pow(acc, 1.0 / p);
}

double weak_s1_quasinorm(const SingularSpectrum& s) {
    double best = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) best = std::max(best, static_cast<double>(j + 1) * s[j]);
    return best;
}

double s_Omega_norm(const SingularSpectrum& s) {
    double best = 0.0;
    double partial = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        partial += s[n];
        best = std::max(best, partial / std::log(2.0 + static_cast<double>(n)));
    }
    return best;
}

double s_omega_norm(const SingularSpectrum& s) {
    double sum = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) sum += s[j] / static_cast<double>(j + 1);
    return sum;
}

SingularSpectrum read_spectrum(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        double v = 0.0;
        if (!text::parse_double(t, v)) {
            throw InvalidInput("spectrum line " + std::to_string(line_no) + ": not a decimal: '" + t + "'");
        }
        values.push_back(v);
    }
    return SingularSpectrum(std::move(values), 1e-9);
}

SingularSpectrum read_spectrum_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open spectrum file '" + path + "'");
    try {
        return read_spectrum(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void write_spectrum(std::ostream& out, const SingularSpectrum& s) {
    for (double v : s.values()) out << text::format_double(v) << '\n';
}

}  // namespace lipdoi
