#include "lipdoi/matrix_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "lipdoi/error.hpp"
#include "lipdoi/text_format.hpp"

namespace lipdoi {

Matrix read_matrix(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_content_line = [&](std::string& out) {
        while (std::getline(in, line)) {
            ++line_no;
            out = text::trim(line);
            if (!out.empty() && out[0] != '#') return true;
        }
        return false;
    };

    std::string header;
    if (!next_content_line(header)) throw InvalidInput("matrix: missing 'rows cols' header");
    const auto dims = text::split_ws(header);
    std::size_t rows = 0, cols = 0;
    if (dims.size() != 2 || !text::parse_size(dims[0], rows) || !text::parse_size(dims[1], cols)) {
        throw InvalidInput("matrix line " + std::to_string(line_no) + ": expected 'rows cols'");
    }
    if (rows == 0 || cols == 0) throw InvalidInput("matrix: rows and cols must be positive");

    std::vector<double> entries;
    entries.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::string row;
        if (!next_content_line(row)) throw InvalidInput("matrix: expected " + std::to_string(rows) + " rows");
        const auto tokens = text::split_ws(row);
        if (tokens.size() != cols) {
            throw InvalidInput("matrix line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                               " entries, found " + std::to_string(tokens.size()));
        }
        for (const auto& tok : tokens) {
            double v = 0.0;
            if (!text::parse_double(tok, v)) {
                throw InvalidInput("matrix line " + std::to_string(line_no) + ": bad number '" + tok + "'");
            }
            entries.push_back(v);
        }
    }
    std::string extra;
    if (next_content_line(extra)) throw InvalidInput("matrix: trailing content at line " + std::to_string(line_no));
    Matrix m(rows, cols, std::move(entries));
    if (!m.all_finite()) throw InvalidInput("matrix: non-finite entry");
    return m;
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open matrix file '" + path + "'");
    try {
        return read_matrix(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ' ';
            out << text::format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write matrix file '" + path + "'");
    write_matrix(out, m);
    if (!out) throw InvalidInput("error writing matrix file '" + path + "'");
}

}  // namespace lipdoi
