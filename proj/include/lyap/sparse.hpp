#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lyap/dense.hpp"

namespace lyap {

// Real CSR matrix. Column indices are strictly increasing within each row.
struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_ptr;  // size n_rows+1, row_ptr[0] == 0
    std::vector<int> col_idx;
    std::vector<double> values;

    int nnz() const { return row_ptr.empty() ? 0 : row_ptr.back(); }

    void validate() const {
        if (static_cast<int>(row_ptr.size()) != n_rows + 1 || row_ptr[0] != 0)
            throw std::invalid_argument("SparseMatrix: bad row_ptr");
        for (int i = 0; i < n_rows; ++i) {
            if (row_ptr[i + 1] < row_ptr[i]) throw std::invalid_argument("SparseMatrix: row_ptr not nondecreasing");
            for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                if (col_idx[p] < 0 || col_idx[p] >= n_cols)
                    throw std::invalid_argument("SparseMatrix: column index out of range");
                if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1])
                    throw std::invalid_argument("SparseMatrix: columns not strictly increasing in row " +
                                                std::to_string(i));
            }
        }
        if (static_cast<int>(col_idx.size()) != nnz() || static_cast<int>(values.size()) != nnz())
            throw std::invalid_argument("SparseMatrix: buffer sizes disagree with nnz");
    }

    static SparseMatrix from_triplets(int rows, int cols, std::vector<std::tuple<int, int, double>> trip,
                                      bool sum_duplicates = true) {
        std::sort(trip.begin(), trip.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
            return std::get<1>(a) < std::get<1>(b);
        });
        SparseMatrix A;
        A.n_rows = rows;
        A.n_cols = cols;
        A.row_ptr.assign(rows + 1, 0);
        for (size_t k = 0; k < trip.size();) {
            const int i = std::get<0>(trip[k]), j = std::get<1>(trip[k]);
            double v = std::get<2>(trip[k]);
            size_t k2 = k + 1;
            while (sum_duplicates && k2 < trip.size() && std::get<0>(trip[k2]) == i && std::get<1>(trip[k2]) == j) {
                v += std::get<2>(trip[k2]);
                ++k2;
            }
            A.col_idx.push_back(j);
            A.values.push_back(v);
            A.row_ptr[i + 1]++;
            k = k2;
        }
        for (int i = 0; i < rows; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
        A.validate();
        return A;
    }

    static SparseMatrix identity(int n) {
        SparseMatrix I;
        I.n_rows = I.n_cols = n;
        I.row_ptr.resize(n + 1);
        I.col_idx.resize(n);
        I.values.assign(n, 1.0);
        for (int i = 0; i <= n; ++i) I.row_ptr[i] = i;
        for (int i = 0; i < n; ++i) I.col_idx[i] = i;
        return I;
    }
};

inline SparseMatrix transpose(const SparseMatrix& A) {
    SparseMatrix T;
    T.n_rows = A.n_cols;
    T.n_cols = A.n_rows;
    T.row_ptr.assign(T.n_rows + 1, 0);
    for (int p = 0; p < A.nnz(); ++p) T.row_ptr[A.col_idx[p] + 1]++;
    for (int i = 0; i < T.n_rows; ++i) T.row_ptr[i + 1] += T.row_ptr[i];
    T.col_idx.resize(A.nnz());
    T.values.resize(A.nnz());
    std::vector<int> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (int i = 0; i < A.n_rows; ++i)
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            const int q = next[A.col_idx[p]]++;
            T.col_idx[q] = i;
            T.values[q] = A.values[p];
        }
    return T;
}

// A + c*M with real c
inline SparseMatrix add_scaled(const SparseMatrix& A, double c, const SparseMatrix& M) {
    if (A.n_rows != M.n_rows || A.n_cols != M.n_cols) throw std::invalid_argument("add_scaled: dimension mismatch");
    SparseMatrix S;
    S.n_rows = A.n_rows;
    S.n_cols = A.n_cols;
    S.row_ptr.assign(A.n_rows + 1, 0);
    for (int i = 0; i < A.n_rows; ++i) {
        int pa = A.row_ptr[i], pm = M.row_ptr[i];
        const int ea = A.row_ptr[i + 1], em = M.row_ptr[i + 1];
        while (pa < ea || pm < em) {
            int ja = pa < ea ? A.col_idx[pa] : A.n_cols;
            int jm = pm < em ? M.col_idx[pm] : A.n_cols;
            if (ja == jm) {
                S.col_idx.push_back(ja);
                S.values.push_back(A.values[pa++] + c * M.values[pm++]);
            } else if (ja < jm) {
                S.col_idx.push_back(ja);
                S.values.push_back(A.values[pa++]);
            } else {
                S.col_idx.push_back(jm);
                S.values.push_back(c * M.values[pm++]);
            }
        }
        S.row_ptr[i + 1] = static_cast<int>(S.col_idx.size());
    }
    return S;
}

inline bool is_symmetric(const SparseMatrix& A, double tol = 0.0) {
    if (A.n_rows != A.n_cols) return false;
    const SparseMatrix T = transpose(A);
    if (T.col_idx != A.col_idx || T.row_ptr != A.row_ptr) return false;
    for (int p = 0; p < A.nnz(); ++p)
        if (std::abs(T.values[p] - A.values[p]) > tol) return false;
    return true;
}

inline DenseReal to_dense(const SparseMatrix& A) {
    DenseReal D(A.n_rows, A.n_cols);
    for (int i = 0; i < A.n_rows; ++i)
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) D(i, A.col_idx[p]) = A.values[p];
    return D;
}

namespace blas {

// y = A*x; rows are independent, so the parallel result is deterministic
template <class S>
void spmv(const SparseMatrix& A, std::span<const S> x, std::span<S> y) {
    if (static_cast<int>(x.size()) != A.n_cols || static_cast<int>(y.size()) != A.n_rows)
        throw std::invalid_argument("spmv: dimension mismatch");
#pragma omp parallel for schedule(static) if (A.n_rows >= kParThreshold / 8)
    for (int i = 0; i < A.n_rows; ++i) {
        S acc{};
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) acc += S(A.values[p]) * x[A.col_idx[p]];
        y[i] = acc;
    }
}

template <class S>
void spmv(const SparseMatrix& A, const DenseMatrix<S>& X, DenseMatrix<S>& Y) {
    for (int j = 0; j < X.cols(); ++j) spmv<S>(A, X.col(j), Y.col(j));
}

template <class S>
DenseMatrix<S> spmv(const SparseMatrix& A, const DenseMatrix<S>& X) {
    DenseMatrix<S> Y(A.n_rows, X.cols());
    spmv(A, X, Y);
    return Y;
}

}  // namespace blas

namespace serial {

template <class S>
void spmv(const SparseMatrix& A, std::span<const S> x, std::span<S> y) {
    for (int i = 0; i < A.n_rows; ++i) {
        S acc{};
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) acc += S(A.values[p]) * x[A.col_idx[p]];
        y[i] = acc;
    }
}

}  // namespace serial

// Cholesky factorization of a banded SPD matrix, used for the mass matrix.
// Band storage: band(d, j) = L(j+d, j), d = 0..bw.
class BandedCholesky {
public:
    BandedCholesky() = default;

    static int bandwidth(const SparseMatrix& M) {
        int bw = 0;
        for (int i = 0; i < M.n_rows; ++i)
            for (int p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p) bw = std::max(bw, std::abs(M.col_idx[p] - i));
        return bw;
    }

    void factor(const SparseMatrix& M, int max_bandwidth = 128) {
        if (M.n_rows != M.n_cols) throw std::invalid_argument("BandedCholesky: matrix not square");
        n_ = M.n_rows;
        bw_ = bandwidth(M);
        if (bw_ > max_bandwidth)
            throw std::invalid_argument("BandedCholesky: bandwidth " + std::to_string(bw_) + " exceeds limit");
        band_ = DenseReal(bw_ + 1, n_);
        for (int i = 0; i < M.n_rows; ++i)
            for (int p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p) {
                const int j = M.col_idx[p];
                if (i >= j) band_(i - j, j) = M.values[p];
            }
        for (int j = 0; j < n_; ++j) {
            double d = band_(0, j);
            if (d <= 0.0) throw std::runtime_error("BandedCholesky: nonpositive pivot at row " + std::to_string(j));
            d = std::sqrt(d);
            band_(0, j) = d;
            for (int i = 1; i <= bw_ && j + i < n_; ++i) band_(i, j) /= d;
            for (int k = 1; k <= bw_ && j + k < n_; ++k) {
                const double ljk = band_(k, j);
                if (ljk == 0.0) continue;
                for (int i = k; i <= bw_ && j + i < n_; ++i) band_(i - k, j + k) -= ljk * band_(i, j);
            }
        }
    }

    int dim() const { return n_; }

    // x <- L^{-1} x
    template <class S>
    void solve_lower(std::span<S> x) const {
        for (int j = 0; j < n_; ++j) {
            x[j] /= band_(0, j);
            const S xj = x[j];
            for (int d = 1; d <= bw_ && j + d < n_; ++d) x[j + d] -= S(band_(d, j)) * xj;
        }
    }

    // x <- L^{-T} x
    template <class S>
    void solve_lower_trans(std::span<S> x) const {
        for (int j = n_ - 1; j >= 0; --j) {
            S acc = x[j];
            for (int d = 1; d <= bw_ && j + d < n_; ++d) acc -= S(band_(d, j)) * x[j + d];
            x[j] = acc / band_(0, j);
        }
    }

    // x <- L x, in place descending so unscaled inputs are still available
    template <class S>
    void apply_lower(std::span<S> x) const {
        for (int i = n_ - 1; i >= 0; --i) {
            S acc{};
            for (int d = 0; d <= bw_ && i - d >= 0; ++d) acc += S(band_(d, i - d)) * x[i - d];
            x[i] = acc;
        }
    }

    // x <- L^T x, in place ascending
    template <class S>
    void apply_lower_trans(std::span<S> x) const {
        for (int j = 0; j < n_; ++j) {
            S acc{};
            for (int d = 0; d <= bw_ && j + d < n_; ++d) acc += S(band_(d, j)) * x[j + d];
            x[j] = acc;
        }
    }

private:
    int n_ = 0;
    int bw_ = 0;
    DenseReal band_;
};

// Factorization M = L L^T for M = identity, diagonal, or banded SPD.
class MassFactor {
public:
    enum class Kind { Identity, Diagonal, Banded };

    MassFactor() = default;

    static MassFactor build(const SparseMatrix& M) {
        MassFactor f;
        f.n_ = M.n_rows;
        if (M.n_rows != M.n_cols) throw std::invalid_argument("MassFactor: matrix not square");
        bool diagonal = true;
        for (int i = 0; i < M.n_rows && diagonal; ++i)
            for (int p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p)
                if (M.col_idx[p] != i) diagonal = false;
        if (diagonal) {
            bool ident = true;
            f.diag_.assign(M.n_rows, 0.0);
            for (int i = 0; i < M.n_rows; ++i) {
                double d = 0.0;
                for (int p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p) d = M.values[p];
                if (d <= 0.0) throw std::runtime_error("MassFactor: nonpositive diagonal at row " + std::to_string(i));
                f.diag_[i] = std::sqrt(d);
                if (d != 1.0) ident = false;
            }
            f.kind_ = ident ? Kind::Identity : Kind::Diagonal;
        } else {
            if (!is_symmetric(M)) throw std::invalid_argument("MassFactor: banded mass matrix must be symmetric");
            f.kind_ = Kind::Banded;
            f.band_.factor(M);
        }
        return f;
    }

    static MassFactor identity(int n) {
        MassFactor f;
        f.n_ = n;
        f.kind_ = Kind::Identity;
        return f;
    }

    Kind kind() const { return kind_; }
    int dim() const { return n_; }
    bool is_identity() const { return kind_ == Kind::Identity; }

    template <class S>
    void solve_lower(std::span<S> x) const {
        switch (kind_) {
            case Kind::Identity: return;
            case Kind::Diagonal:
                for (int i = 0; i < n_; ++i) x[i] /= diag_[i];
                return;
            case Kind::Banded: band_.solve_lower(x); return;
        }
    }

    template <class S>
    void solve_lower_trans(std::span<S> x) const {
        switch (kind_) {
            case Kind::Identity: return;
            case Kind::Diagonal:
                for (int i = 0; i < n_; ++i) x[i] /= diag_[i];
                return;
            case Kind::Banded: band_.solve_lower_trans(x); return;
        }
    }

    template <class S>
    void apply_lower(std::span<S> x) const {
        switch (kind_) {
            case Kind::Identity: return;
            case Kind::Diagonal:
                for (int i = 0; i < n_; ++i) x[i] *= diag_[i];
                return;
            case Kind::Banded: band_.apply_lower(x); return;
        }
    }

    template <class S>
    void apply_lower_trans(std::span<S> x) const {
        switch (kind_) {
            case Kind::Identity: return;
            case Kind::Diagonal:
                for (int i = 0; i < n_; ++i) x[i] *= diag_[i];
                return;
            case Kind::Banded: band_.apply_lower_trans(x); return;
        }
    }

    template <class S>
    void solve_lower(DenseMatrix<S>& X) const {
        for (int j = 0; j < X.cols(); ++j) solve_lower(X.col(j));
    }
    template <class S>
    void solve_lower_trans(DenseMatrix<S>& X) const {
        for (int j = 0; j < X.cols(); ++j) solve_lower_trans(X.col(j));
    }

private:
    Kind kind_ = Kind::Identity;
    int n_ = 0;
    std::vector<double> diag_;
    BandedCholesky band_;
};

}  // namespace lyap
