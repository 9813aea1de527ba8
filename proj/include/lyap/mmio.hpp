#pragma once

#include <string>

#include "lyap/dense.hpp"
#include "lyap/sparse.hpp"

namespace lyap {

// Matrix Market coordinate I/O for sparse matrices and array/coordinate I/O
// for dense matrices. Values are written with 17 significant digits, so a
// write/read round trip reproduces every double exactly. Parse errors carry
// the offending line number.

void write_matrix_market(const std::string& path, const SparseMatrix& A);
SparseMatrix read_matrix_market(const std::string& path);

void write_matrix_market_dense(const std::string& path, const DenseReal& B);
DenseReal read_matrix_market_dense(const std::string& path);

}  // namespace lyap
