#include "lyap/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace lyap {

namespace {

[[noreturn]] void fail(const std::string& path, long line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct Header {
    bool coordinate = true;
    bool symmetric = false;
    bool pattern = false;
};

Header parse_header(std::istream& in, const std::string& path, long& line) {
    std::string first;
    if (!std::getline(in, first)) fail(path, 1, "empty file");
    line = 1;
    std::istringstream hs(first);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix")
        fail(path, 1, "malformed MatrixMarket header");
    Header h;
    const std::string f = lower(format);
    if (f == "coordinate")
        h.coordinate = true;
    else if (f == "array")
        h.coordinate = false;
    else
        fail(path, 1, "unsupported format '" + format + "'");
    const std::string fld = lower(field);
    if (fld == "pattern")
        h.pattern = true;
    else if (fld != "real" && fld != "integer")
        fail(path, 1, "unsupported field '" + field + "'");
    const std::string sym = lower(symmetry);
    if (sym == "symmetric")
        h.symmetric = true;
    else if (sym == "skew-symmetric")
        fail(path, 1, "skew-symmetric storage not supported");
    else if (sym != "general")
        fail(path, 1, "unsupported symmetry '" + symmetry + "'");
    return h;
}

bool next_content_line(std::istream& in, std::string& out, long& line) {
    while (std::getline(in, out)) {
        ++line;
        size_t i = out.find_first_not_of(" \t\r");
        if (i == std::string::npos) continue;
        if (out[i] == '%') continue;
        return true;
    }
    return false;
}

}  // namespace

void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
    std::fprintf(f, "%d %d %d\n", A.n_rows, A.n_cols, A.nnz());
    for (int i = 0; i < A.n_rows; ++i)
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
            std::fprintf(f, "%d %d %.17g\n", i + 1, A.col_idx[p] + 1, A.values[p]);
    std::fclose(f);
}

SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    long line = 0;
    const Header h = parse_header(in, path, line);
    if (!h.coordinate) fail(path, 1, "expected coordinate format for a sparse matrix");
    std::string s;
    if (!next_content_line(in, s, line)) fail(path, line, "missing size line");
    long rows = 0, cols = 0, nnz = 0;
    {
        std::istringstream ls(s);
        if (!(ls >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) fail(path, line, "malformed size line");
    }
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(h.symmetric ? 2 * nnz : nnz));
    for (long k = 0; k < nnz; ++k) {
        if (!next_content_line(in, s, line)) fail(path, line, "unexpected end of file, expected " + std::to_string(nnz) + " entries");
        std::istringstream ls(s);
        long i = 0, j = 0;
        double v = 1.0;
        if (!(ls >> i >> j)) fail(path, line, "malformed entry");
        if (!h.pattern && !(ls >> v)) fail(path, line, "malformed entry value");
        if (i < 1 || i > rows || j < 1 || j > cols) fail(path, line, "entry index out of bounds");
        trip.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
        if (h.symmetric && i != j) trip.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
    }
    return SparseMatrix::from_triplets(static_cast<int>(rows), static_cast<int>(cols), std::move(trip),
                                       /*sum_duplicates=*/false);
}

void write_matrix_market_dense(const std::string& path, const DenseReal& B) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "%%%%MatrixMarket matrix array real general\n");
    std::fprintf(f, "%d %d\n", B.rows(), B.cols());
    for (int j = 0; j < B.cols(); ++j)
        for (int i = 0; i < B.rows(); ++i) std::fprintf(f, "%.17g\n", B(i, j));
    std::fclose(f);
}

DenseReal read_matrix_market_dense(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    long line = 0;
    const Header h = parse_header(in, path, line);
    std::string s;
    if (!next_content_line(in, s, line)) fail(path, line, "missing size line");
    if (h.coordinate) {
        // accept coordinate storage for dense right-hand sides as well
        long rows = 0, cols = 0, nnz = 0;
        std::istringstream ls(s);
        if (!(ls >> rows >> cols >> nnz)) fail(path, line, "malformed size line");
        DenseReal B(static_cast<int>(rows), static_cast<int>(cols));
        for (long k = 0; k < nnz; ++k) {
            if (!next_content_line(in, s, line)) fail(path, line, "unexpected end of file");
            std::istringstream es(s);
            long i = 0, j = 0;
            double v = 0.0;
            if (!(es >> i >> j >> v)) fail(path, line, "malformed entry");
            if (i < 1 || i > rows || j < 1 || j > cols) fail(path, line, "entry index out of bounds");
            B(static_cast<int>(i - 1), static_cast<int>(j - 1)) = v;
            if (h.symmetric && i != j) B(static_cast<int>(j - 1), static_cast<int>(i - 1)) = v;
        }
        return B;
    }
    long rows = 0, cols = 0;
    {
        std::istringstream ls(s);
        if (!(ls >> rows >> cols) || rows < 0 || cols < 0) fail(path, line, "malformed size line");
    }
    DenseReal B(static_cast<int>(rows), static_cast<int>(cols));
    for (long j = 0; j < cols; ++j)
        for (long i = 0; i < rows; ++i) {
            if (!next_content_line(in, s, line)) fail(path, line, "unexpected end of file in array data");
            std::istringstream es(s);
            double v = 0.0;
            if (!(es >> v)) fail(path, line, "malformed array value");
            B(static_cast<int>(i), static_cast<int>(j)) = v;
        }
    return B;
}

}  // namespace lyap
