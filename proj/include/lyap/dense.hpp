#pragma once

#include <algorithm>
#include <cassert>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "lyap/blas.hpp"

namespace lyap {

// Column-major dense matrix over double or std::complex<double>.
template <class S>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, S{}) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    S& operator()(int i, int j) { return v_[static_cast<size_t>(j) * rows_ + i]; }
    const S& operator()(int i, int j) const { return v_[static_cast<size_t>(j) * rows_ + i]; }

    std::span<S> col(int j) { return {v_.data() + static_cast<size_t>(j) * rows_, static_cast<size_t>(rows_)}; }
    std::span<const S> col(int j) const {
        return {v_.data() + static_cast<size_t>(j) * rows_, static_cast<size_t>(rows_)};
    }
    S* data() { return v_.data(); }
    const S* data() const { return v_.data(); }

    static DenseMatrix identity(int n) {
        DenseMatrix I(n, n);
        for (int i = 0; i < n; ++i) I(i, i) = S{1};
        return I;
    }

    DenseMatrix block(int i0, int j0, int m, int n) const {
        DenseMatrix out(m, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) out(i, j) = (*this)(i0 + i, j0 + j);
        return out;
    }

    void set_block(int i0, int j0, const DenseMatrix& src) {
        for (int j = 0; j < src.cols(); ++j)
            for (int i = 0; i < src.rows(); ++i) (*this)(i0 + i, j0 + j) = src(i, j);
    }

    // grows in place, preserving the leading block
    void resize_preserve(int rows, int cols) {
        DenseMatrix out(rows, cols);
        const int mr = std::min(rows, rows_), mc = std::min(cols, cols_);
        for (int j = 0; j < mc; ++j)
            for (int i = 0; i < mr; ++i) out(i, j) = (*this)(i, j);
        *this = std::move(out);
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<S> v_;
};

using DenseReal = DenseMatrix<double>;
using DenseCplx = DenseMatrix<cplx>;

template <class S>
DenseMatrix<S> conj_transpose(const DenseMatrix<S>& A) {
    DenseMatrix<S> out(A.cols(), A.rows());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) out(j, i) = conj_val(A(i, j));
    return out;
}

inline DenseCplx to_complex(const DenseReal& A) {
    DenseCplx out(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) out(i, j) = cplx(A(i, j), 0.0);
    return out;
}

inline DenseReal real_part(const DenseCplx& A) {
    DenseReal out(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) out(i, j) = A(i, j).real();
    return out;
}

inline DenseReal imag_part(const DenseCplx& A) {
    DenseReal out(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) out(i, j) = A(i, j).imag();
    return out;
}

namespace blas {

// C = alpha*A*B + beta*C. One output element per (i,j), inner k ascending.
template <class S>
void gemm_nn(S alpha, const DenseMatrix<S>& A, const DenseMatrix<S>& B, S beta, DenseMatrix<S>& C) {
    assert(A.cols() == B.rows() && C.rows() == A.rows() && C.cols() == B.cols());
    const int m = A.rows(), k = A.cols(), n = B.cols();
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(m) * n;
#pragma omp parallel for schedule(static) if (total* k >= kParThreshold)
    for (std::ptrdiff_t e = 0; e < total; ++e) {
        const int j = static_cast<int>(e / m);
        const int i = static_cast<int>(e % m);
        S acc{};
        for (int p = 0; p < k; ++p) acc += A(i, p) * B(p, j);
        C(i, j) = alpha * acc + beta * C(i, j);
    }
}

// C = alpha*A^H*B + beta*C
template <class S>
void gemm_ch(S alpha, const DenseMatrix<S>& A, const DenseMatrix<S>& B, S beta, DenseMatrix<S>& C) {
    assert(A.rows() == B.rows() && C.rows() == A.cols() && C.cols() == B.cols());
    const int m = A.cols(), k = A.rows(), n = B.cols();
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(m) * n;
#pragma omp parallel for schedule(static) if (total* k >= kParThreshold)
    for (std::ptrdiff_t e = 0; e < total; ++e) {
        const int j = static_cast<int>(e / m);
        const int i = static_cast<int>(e % m);
        S acc{};
        for (int p = 0; p < k; ++p) acc += conj_val(A(p, i)) * B(p, j);
        C(i, j) = alpha * acc + beta * C(i, j);
    }
}

template <class S>
DenseMatrix<S> matmul(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
    DenseMatrix<S> C(A.rows(), B.cols());
    gemm_nn(S{1}, A, B, S{0}, C);
    return C;
}

template <class S>
DenseMatrix<S> matmul_ch(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
    DenseMatrix<S> C(A.cols(), B.cols());
    gemm_ch(S{1}, A, B, S{0}, C);
    return C;
}

}  // namespace blas

namespace serial {

template <class S>
void gemm_nn(S alpha, const DenseMatrix<S>& A, const DenseMatrix<S>& B, S beta, DenseMatrix<S>& C) {
    const int m = A.rows(), k = A.cols(), n = B.cols();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) {
            S acc{};
            for (int p = 0; p < k; ++p) acc += A(i, p) * B(p, j);
            C(i, j) = alpha * acc + beta * C(i, j);
        }
}

}  // namespace serial

template <class S>
double frob_norm(const DenseMatrix<S>& A) {
    double acc = 0.0;
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) {
            const double a = scalar_traits<S>::re(A(i, j)), b = scalar_traits<S>::im(A(i, j));
            acc += a * a + b * b;
        }
    return std::sqrt(acc);
}

template <class S>
double max_abs(const DenseMatrix<S>& A) {
    double m = 0.0;
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) m = std::max(m, std::abs(A(i, j)));
    return m;
}

template <class S>
DenseMatrix<S> operator-(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
    assert(A.rows() == B.rows() && A.cols() == B.cols());
    DenseMatrix<S> C(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) C(i, j) = A(i, j) - B(i, j);
    return C;
}

template <class S>
DenseMatrix<S> operator+(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
    assert(A.rows() == B.rows() && A.cols() == B.cols());
    DenseMatrix<S> C(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) C(i, j) = A(i, j) + B(i, j);
    return C;
}

template <class S>
DenseMatrix<S> scaled(const DenseMatrix<S>& A, S c) {
    DenseMatrix<S> C(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) C(i, j) = c * A(i, j);
    return C;
}

}  // namespace lyap
