#pragma once

#include <iosfwd>
#include <string>

#include "lipdoi/matrix.hpp"

namespace lipdoi {

// Matrix text format: first line "rows cols", then one row per line with
// space-separated decimals (scientific notation accepted). Blank lines and
// lines starting with '#' are ignored.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix_file(const std::string& path, const Matrix& m);

}  // namespace lipdoi
