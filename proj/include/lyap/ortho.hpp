#pragma once

#include <cmath>
#include <stdexcept>

#include "lyap/dense.hpp"

namespace lyap {

inline constexpr double kBreakdownTol = 1e-14;

template <class S>
struct ThinQR {
    DenseMatrix<S> Q;      // n x r, orthonormal columns
    DenseMatrix<S> R;      // r x r upper triangular
    bool rank_deficient = false;
};

// Thin QR by column-wise Gram-Schmidt applied twice. Diagonals of R are kept
// real nonnegative. A diagonal below kBreakdownTol*||B|| flags rank
// deficiency; the offending column is replaced by zeros.
template <class S>
ThinQR<S> thin_qr(const DenseMatrix<S>& B) {
    const int n = B.rows(), r = B.cols();
    if (n < r) throw std::invalid_argument("thin_qr: need at least as many rows as columns");
    ThinQR<S> out;
    out.Q = B;
    out.R = DenseMatrix<S>(r, r);
    const double scale = frob_norm(B);
    for (int j = 0; j < r; ++j) {
        auto qj = out.Q.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < j; ++i) {
                const S c = blas::dot<S>(out.Q.col(i), qj);
                blas::axpy<S>(-c, out.Q.col(i), qj);
                out.R(i, j) += c;
            }
        }
        const double nrm = blas::nrm2<S>(qj);
        out.R(j, j) = S(nrm);
        if (nrm <= kBreakdownTol * (scale > 0 ? scale : 1.0)) {
            out.rank_deficient = true;
            for (auto& v : qj) v = S{};
        } else {
            blas::scal<S>(S(1.0 / nrm), qj);
        }
    }
    return out;
}

template <class S>
struct OrthoBasis {
    DenseMatrix<S> Q;  // n x (blocks*r)
    int block_size = 1;

    int blocks() const { return block_size > 0 ? Q.cols() / block_size : 0; }
    int rows() const { return Q.rows(); }
    int cols() const { return Q.cols(); }

    // ||Q^H Q - I||_F, the re-orthogonalization invariant
    double ortho_error() const {
        if (Q.cols() == 0) return 0.0;
        DenseMatrix<S> G = blas::matmul_ch(Q, Q);
        for (int i = 0; i < G.rows(); ++i) G(i, i) -= S{1};
        return frob_norm(G);
    }
};

// Orthonormal basis of the column span, dependent columns dropped (CGS2
// column sweep). Returns the basis and its column count.
template <class S>
DenseMatrix<S> orthonormal_span(const DenseMatrix<S>& W, double rel_tol = 1e-10) {
    const int n = W.rows(), m = W.cols();
    const double scale = frob_norm(W);
    DenseMatrix<S> Q(n, m);
    int k = 0;
    std::vector<S> v(static_cast<size_t>(n));
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = W(i, j);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < k; ++i) {
                const S c = blas::dot<S>(Q.col(i), std::span<const S>(v));
                blas::axpy<S>(-c, Q.col(i), std::span<S>(v));
            }
        const double nrm = blas::nrm2<S>(std::span<const S>(v));
        if (nrm <= rel_tol * (scale > 0 ? scale : 1.0)) continue;
        for (int i = 0; i < n; ++i) Q(i, k) = v[static_cast<size_t>(i)] * S(1.0 / nrm);
        ++k;
    }
    return Q.block(0, 0, n, k);
}

template <class S>
struct GramSchmidtResult {
    DenseMatrix<S> h;           // (j+1)*r x r orthogonalization coefficients
    DenseMatrix<S> new_block;   // n x r, the appended orthonormal columns
    bool rank_deficient = false;
};

// Extends Q by the orthogonal complement of W using classical block
// Gram-Schmidt applied twice; the trailing r x r block of h comes from a thin
// QR of the remainder and is upper triangular. W = [Q, new] * h up to
// roundoff. Breakdown (new column norm below kBreakdownTol*||W||) is
// reported, not repaired.
template <class S>
GramSchmidtResult<S> gram_schmidt_extend(OrthoBasis<S>& Q, const DenseMatrix<S>& W) {
    const int r = W.cols();
    const int jr = Q.Q.cols();
    if (Q.Q.rows() != 0 && Q.Q.rows() != W.rows())
        throw std::invalid_argument("gram_schmidt_extend: row count mismatch");
    GramSchmidtResult<S> out;
    out.h = DenseMatrix<S>(jr + r, r);
    DenseMatrix<S> V = W;
    for (int pass = 0; pass < 2 && jr > 0; ++pass) {
        DenseMatrix<S> c = blas::matmul_ch(Q.Q, V);          // jr x r
        DenseMatrix<S> Qc = blas::matmul(Q.Q, c);            // n x r
        for (int j = 0; j < r; ++j) blas::axpy<S>(S{-1}, Qc.col(j), V.col(j));
        for (int jj = 0; jj < r; ++jj)
            for (int ii = 0; ii < jr; ++ii) out.h(ii, jj) += c(ii, jj);
    }
    const double wscale = frob_norm(W);
    ThinQR<S> qr = thin_qr(V);
    // breakdown measured against ||W||, not the deflated remainder
    for (int j = 0; j < r; ++j)
        if (std::abs(qr.R(j, j)) <= kBreakdownTol * (wscale > 0 ? wscale : 1.0)) out.rank_deficient = true;
    out.new_block = qr.Q;
    out.h.set_block(jr, 0, qr.R);
    DenseMatrix<S> grown(W.rows(), jr + r);
    if (jr > 0) grown.set_block(0, 0, Q.Q);
    grown.set_block(0, jr, qr.Q);
    Q.Q = std::move(grown);
    if (Q.block_size != r && jr == 0) Q.block_size = r;
    return out;
}

}  // namespace lyap
