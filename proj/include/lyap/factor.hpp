#pragma once

#include <optional>
#include <variant>

#include "lyap/dense.hpp"
#include "lyap/eig.hpp"

namespace lyap {

// X ~ Z Z^* when no coefficient is present, X ~ Z Y Z^* otherwise.
template <class S>
struct FactorT {
    DenseMatrix<S> Z;
    std::optional<DenseMatrix<S>> Y;
};

struct LowRankFactor {
    std::variant<FactorT<double>, FactorT<cplx>> f;
    bool conjugate_closed = true;  // false when a complex factor could not be realified

    bool is_complex() const { return f.index() == 1; }
    int rows() const {
        return std::visit([](const auto& x) { return x.Z.rows(); }, f);
    }
    int cols() const {
        return std::visit([](const auto& x) { return x.Z.cols(); }, f);
    }

    // y += X v for real v, used by the matrix-free residual oracles
    template <class S>
    DenseMatrix<S> apply(const DenseMatrix<S>& V) const;
};

template <class S>
DenseMatrix<S> factor_apply(const FactorT<S>& fac, const DenseMatrix<S>& V) {
    DenseMatrix<S> t = blas::matmul_ch(fac.Z, V);  // k x m
    if (fac.Y) {
        DenseMatrix<S> t2 = blas::matmul(*fac.Y, t);
        return blas::matmul(fac.Z, t2);
    }
    return blas::matmul(fac.Z, t);
}

// Real equivalent of X = Z Z^* for a complex factor with conjugate-closed
// span: the real/imaginary column split W = [Re Z, Im Z] satisfies
// W W^T = Re(Z Z^*) exactly; a small Gram eigensolve then removes the
// numerically void directions so the output keeps about as many columns as
// the complex factor.
inline DenseReal realify_gram(const DenseCplx& Z, double drop_rel = 1e-14) {
    const int n = Z.rows(), k = Z.cols();
    DenseReal W(n, 2 * k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) {
            W(i, j) = Z(i, j).real();
            W(i, k + j) = Z(i, j).imag();
        }
    DenseReal G(2 * k, 2 * k);
    blas::gemm_ch(1.0, W, W, 0.0, G);
    DenseReal V;
    std::vector<double> ev = sym_eig_jacobi(G, &V);
    const double lmax = ev.empty() ? 0.0 : std::max(0.0, ev.back());
    int keep = 0;
    for (double e : ev)
        if (e > drop_rel * lmax) ++keep;
    DenseReal Vk(2 * k, keep);
    int c = 0;
    for (int i = 0; i < 2 * k; ++i)
        if (ev[static_cast<size_t>(i)] > drop_rel * lmax) {
            for (int rrow = 0; rrow < 2 * k; ++rrow) Vk(rrow, c) = V(rrow, i);
            ++c;
        }
    return blas::matmul(W, Vk);
}

template <class S>
DenseMatrix<S> LowRankFactor::apply(const DenseMatrix<S>& V) const {
    return factor_apply(std::get<FactorT<S>>(f), V);
}

}  // namespace lyap
