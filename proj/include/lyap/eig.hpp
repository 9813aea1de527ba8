#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "lyap/dense.hpp"
#include "lyap/rng.hpp"

namespace lyap {

// ---- dense LU with partial pivoting -------------------------------------

template <class S>
class DenseLU {
public:
    void factor(DenseMatrix<S> A) {
        if (A.rows() != A.cols()) throw std::invalid_argument("DenseLU: matrix not square");
        const int n = A.rows();
        lu_ = std::move(A);
        piv_.resize(n);
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    p = i;
                }
            piv_[k] = p;
            if (best == 0.0) throw std::runtime_error("DenseLU: singular matrix at column " + std::to_string(k));
            if (p != k)
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            const S d = lu_(k, k);
            for (int i = k + 1; i < n; ++i) {
                lu_(i, k) /= d;
                const S m = lu_(i, k);
                if (m != S{})
                    for (int j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
            }
        }
    }

    int dim() const { return lu_.rows(); }

    void solve_in_place(std::span<S> b) const {
        const int n = lu_.rows();
        // rows were swapped in full during factorization, so the whole
        // permutation applies before the triangular sweeps
        for (int k = 0; k < n; ++k)
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
        for (int k = 0; k < n; ++k)
            for (int i = k + 1; i < n; ++i) b[i] -= lu_(i, k) * b[k];
        for (int k = n - 1; k >= 0; --k) {
            b[k] /= lu_(k, k);
            for (int i = 0; i < k; ++i) b[i] -= lu_(i, k) * b[k];
        }
    }

    void solve_in_place(DenseMatrix<S>& B) const {
        for (int j = 0; j < B.cols(); ++j) solve_in_place(B.col(j));
    }

    DenseMatrix<S> solve(const DenseMatrix<S>& B) const {
        DenseMatrix<S> X = B;
        solve_in_place(X);
        return X;
    }

private:
    DenseMatrix<S> lu_;
    std::vector<int> piv_;
};

template <class S>
DenseMatrix<S> dense_inverse(const DenseMatrix<S>& A) {
    DenseLU<S> lu;
    lu.factor(A);
    return lu.solve(DenseMatrix<S>::identity(A.rows()));
}

// ---- Hessenberg / Schur / projected Lyapunov -----------------------------

struct SchurForm {
    DenseCplx U;  // unitary
    DenseCplx S;  // upper triangular
    std::vector<cplx> eigenvalues() const {
        std::vector<cplx> ev(S.rows());
        for (int i = 0; i < S.rows(); ++i) ev[i] = S(i, i);
        return ev;
    }
};

// V H V^* = T with H upper Hessenberg, V unitary
void hessenberg_reduce(const DenseCplx& T, DenseCplx& V, DenseCplx& H);

// complex Schur form via shifted QR with deflation; throws on
// non-convergence, reporting how many eigenvalues had deflated
SchurForm schur(const DenseCplx& T, int max_sweeps_per_eig = 30);
SchurForm schur(const DenseReal& T);

std::vector<cplx> eigenvalues(const DenseCplx& T);
std::vector<cplx> eigenvalues(const DenseReal& T);

// Solves T Y + Y T^* + W = 0 (W Hermitian) by Schur reduction and triangular
// back-substitution; the result is Hermitian-symmetrized. Throws when the
// spectrum violates Lambda(T) cap -Lambda(T^*) = empty, naming the pair.
DenseCplx lyap_dense(const DenseCplx& T, const DenseCplx& W);
DenseReal lyap_dense_real(const DenseReal& T, const DenseReal& W);

// ---- spectral norms and symmetric eigenvalues ----------------------------

// ||X||_2 by power iteration on X^H X (tolerance 1e-12, max 500 steps)
template <class S>
double spectral_norm_small(const DenseMatrix<S>& X) {
    const int n = X.rows(), m = X.cols();
    if (n == 0 || m == 0) return 0.0;
    if (m > 1000) throw std::invalid_argument("spectral_norm_small: too many columns");
    std::vector<S> v(static_cast<size_t>(m));
    CounterRng rng(0x5eed5eedULL);
    for (auto& e : v) e = S(rng.uniform_symmetric());
    double nv = blas::nrm2<S>(std::span<const S>(v));
    if (nv == 0.0) return 0.0;
    blas::scal<S>(S(1.0 / nv), std::span<S>(v));
    std::vector<S> w(static_cast<size_t>(n));
    std::vector<S> u(static_cast<size_t>(m));
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        // w = X v ; u = X^H w
        for (int i = 0; i < n; ++i) {
            S acc{};
            for (int j = 0; j < m; ++j) acc += X(i, j) * v[static_cast<size_t>(j)];
            w[static_cast<size_t>(i)] = acc;
        }
        const double swn = blas::nrm2<S>(std::span<const S>(w));
        for (int j = 0; j < m; ++j) {
            S acc{};
            for (int i = 0; i < n; ++i) acc += conj_val(X(i, j)) * w[static_cast<size_t>(i)];
            u[static_cast<size_t>(j)] = acc;
        }
        const double un = blas::nrm2<S>(std::span<const S>(u));
        if (un == 0.0) return swn;
        for (int j = 0; j < m; ++j) v[static_cast<size_t>(j)] = u[static_cast<size_t>(j)] * S(1.0 / un);
        const double snew = swn;  // ||Xv|| with unit v
        if (it > 0 && std::abs(snew - sigma) <= 1e-12 * std::max(1.0, snew)) return snew;
        sigma = snew;
    }
    return sigma;
}

// eigenvalues (ascending) of a real symmetric matrix by cyclic Jacobi;
// optionally accumulates eigenvectors as columns of V
std::vector<double> sym_eig_jacobi(DenseReal A, DenseReal* V = nullptr, int max_sweeps = 50);

struct LanczosResult {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool converged = false;
    int steps = 0;
};

// Extreme eigenvalues of a Hermitian operator by Lanczos with full
// reorthogonalization. `op(x, y)` computes y = Op x on vectors of length n.
template <class S, class Op>
LanczosResult lanczos_extreme(int n, Op&& op, int max_steps = 80, double rel_tol = 1e-6,
                              std::uint64_t seed = 0x1a2b3c4dULL) {
    LanczosResult res;
    if (n == 0) return res;
    max_steps = std::min(max_steps, n);
    DenseMatrix<S> V(n, max_steps + 1);
    std::vector<double> alpha, beta;
    {
        CounterRng rng(seed);
        auto v0 = V.col(0);
        for (auto& e : v0) e = S(rng.uniform_symmetric());
        const double nv = blas::nrm2<S>(std::span<const S>(v0));
        blas::scal<S>(S(1.0 / nv), v0);
    }
    std::vector<S> w(static_cast<size_t>(n));
    double prev_min = 0.0, prev_max = 0.0;
    for (int j = 0; j < max_steps; ++j) {
        op(V.col(j), std::span<S>(w));
        const S a = blas::dot<S>(V.col(j), std::span<const S>(w));
        alpha.push_back(scalar_traits<S>::re(a));
        blas::axpy<S>(-a, V.col(j), std::span<S>(w));
        if (j > 0) blas::axpy<S>(S(-beta[j - 1]), V.col(j - 1), std::span<S>(w));
        // full reorthogonalization pass
        for (int i = 0; i <= j; ++i) {
            const S c = blas::dot<S>(V.col(i), std::span<const S>(w));
            blas::axpy<S>(-c, V.col(i), std::span<S>(w));
        }
        const double b = blas::nrm2<S>(std::span<const S>(w));
        // tridiagonal Ritz values
        const int k = j + 1;
        DenseReal T(k, k);
        for (int i = 0; i < k; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        std::vector<double> ritz = sym_eig_jacobi(T);
        res.lambda_min = ritz.front();
        res.lambda_max = ritz.back();
        res.steps = k;
        const double scale = std::max(std::abs(res.lambda_min), std::abs(res.lambda_max));
        if (j > 2 && std::abs(res.lambda_min - prev_min) <= rel_tol * std::max(scale, 1e-300) &&
            std::abs(res.lambda_max - prev_max) <= rel_tol * std::max(scale, 1e-300)) {
            res.converged = true;
            return res;
        }
        prev_min = res.lambda_min;
        prev_max = res.lambda_max;
        if (b <= 1e-14 * std::max(1.0, scale)) {  // invariant subspace found
            res.converged = true;
            return res;
        }
        if (j + 1 < max_steps + 1) {
            beta.push_back(b);
            auto vnext = V.col(j + 1);
            for (int i = 0; i < n; ++i) vnext[i] = w[static_cast<size_t>(i)] * S(1.0 / b);
        }
    }
    return res;
}

}  // namespace lyap
