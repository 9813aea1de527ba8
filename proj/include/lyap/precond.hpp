#pragma once

#include <span>
#include <string>

#include "lyap/sparse.hpp"

namespace lyap {

enum class PrecondKind { None, Jacobi, ILU0, ILUT, IC0, ICT };

PrecondKind precond_kind_from_string(const std::string& s);
std::string to_string(PrecondKind k);

// Factored sparse preconditioner. ILU variants hold L (unit lower diagonal,
// diagonal not stored) and U (upper, diagonal first entry per row). IC
// variants hold L alone with the diagonal stored; apply solves L L^T x = b.
// IC factorization requires a symmetric input with positive diagonal; the
// caller flips the sign of negative definite operators beforehand.
class Preconditioner {
public:
    PrecondKind kind = PrecondKind::None;
    int n = 0;
    std::vector<double> diag_inv;  // Jacobi
    SparseMatrix L;
    SparseMatrix U;

    template <class S>
    void apply(std::span<S> x) const {
        switch (kind) {
            case PrecondKind::None: return;
            case PrecondKind::Jacobi:
                for (int i = 0; i < n; ++i) x[i] *= S(diag_inv[i]);
                return;
            case PrecondKind::ILU0:
            case PrecondKind::ILUT:
                // L y = x (unit diagonal), then U x = y
                for (int i = 0; i < n; ++i) {
                    S acc = x[i];
                    for (int p = L.row_ptr[i]; p < L.row_ptr[i + 1]; ++p) acc -= S(L.values[p]) * x[L.col_idx[p]];
                    x[i] = acc;
                }
                for (int i = n - 1; i >= 0; --i) {
                    S acc = x[i];
                    const int p0 = U.row_ptr[i];
                    for (int p = p0 + 1; p < U.row_ptr[i + 1]; ++p) acc -= S(U.values[p]) * x[U.col_idx[p]];
                    x[i] = acc / S(U.values[p0]);
                }
                return;
            case PrecondKind::IC0:
            case PrecondKind::ICT:
                // L y = x, L^T x = y; diagonal of L is the last entry per row
                for (int i = 0; i < n; ++i) {
                    S acc = x[i];
                    const int pd = L.row_ptr[i + 1] - 1;
                    for (int p = L.row_ptr[i]; p < pd; ++p) acc -= S(L.values[p]) * x[L.col_idx[p]];
                    x[i] = acc / S(L.values[pd]);
                }
                for (int i = n - 1; i >= 0; --i) {
                    x[i] /= S(L.values[L.row_ptr[i + 1] - 1]);
                    const S xi = x[i];
                    for (int p = L.row_ptr[i]; p < L.row_ptr[i + 1] - 1; ++p)
                        x[L.col_idx[p]] -= S(L.values[p]) * xi;
                }
                return;
        }
    }
};

// droptol applies to ILUT/ICT: entries below droptol times the 2-norm of the
// current row are discarded. Zero or nonpositive pivots raise errors naming
// the row.
Preconditioner build_preconditioner(const SparseMatrix& A, PrecondKind kind, double droptol = 0.0);

}  // namespace lyap
