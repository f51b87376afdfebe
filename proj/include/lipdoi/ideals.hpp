#pragma once

#include <iosfwd>
#include <string>

#include "lipdoi/linalg.hpp"

namespace lipdoi {

// Singular values of m, nonincreasing, length min(rows, cols).
SingularSpectrum singular_spectrum(const Matrix& m);

// (sum_j s_j^p)^(1/p), p >= 1.
double schatten_norm(const SingularSpectrum& s, double p);

// Weak trace-class quasinorm: max_j (1 + j) s_j.
double weak_s1_quasinorm(const SingularSpectrum& s);

// max over n of (s_0 + ... + s_n) / ln(2 + n).
double s_Omega_norm(const SingularSpectrum& s);

// Matsaev norm: sum_j s_j / (1 + j).
double s_omega_norm(const SingularSpectrum& s);

// Spectrum text format: one decimal per line, nonincreasing. A rise larger
// than 1e-9 is a read error.
SingularSpectrum read_spectrum(std::istream& in);
SingularSpectrum read_spectrum_file(const std::string& path);
void write_spectrum(std::ostream& out, const SingularSpectrum& s);

}  // namespace lipdoi
