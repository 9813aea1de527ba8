#pragma once

#include <map>
#include <memory>
#include <stdexcept>

#include "lyap/dense.hpp"
#include "lyap/eig.hpp"
#include "lyap/krylov.hpp"
#include "lyap/ortho.hpp"
#include "lyap/precond.hpp"
#include "lyap/rng.hpp"
#include "lyap/sparse.hpp"

namespace lyap {

enum class InnerKind { Direct, BiCGstab, Minres };

InnerKind inner_kind_from_string(const std::string& s);
std::string to_string(InnerKind k);

struct InnerConfig {
    InnerKind kind = InnerKind::Direct;
    PrecondKind precond = PrecondKind::None;
    double droptol = 1e-3;
    int maxit = 2000;
    int direct_limit = 2000;
    double forced_residual = 0.0;  // Direct only: inject a residual of exactly this norm
};

template <class S>
struct ShiftedSolveResult {
    DenseMatrix<S> W;       // solution block
    DenseMatrix<S> R;       // true residual block rhs - Op W
    double s_norm = 0.0;    // spectral norm of R
    int iterations = 0;     // summed over columns
    bool converged = true;
    bool breakdown = false;
};

// Solves blocks of shifted systems for the outer iterations. Two operator
// forms:
//   plain:       x -> A x + shift * M x
//   transformed: x -> Lm^{-1} A Lm^{-T} x + shift * x  (standard-form pencil)
// The preconditioner is assembled once per distinct Re(shift) from
// A + Re(shift) M and wrapped with the mass factors in transformed mode; a
// negated copy is factorized for the Cholesky kinds when the shifted matrix
// is negative definite. Direct solves keep one dense LU per shift.
template <class S>
class ShiftedSolver {
public:
    ShiftedSolver(const SparseMatrix& A, const SparseMatrix& M, const MassFactor* lm, bool transformed,
                  InnerConfig cfg)
        : A_(A), M_(M), lm_(lm), transformed_(transformed), cfg_(cfg) {
        if (transformed_ && !lm_) throw std::invalid_argument("ShiftedSolver: transformed mode needs mass factors");
    }

    void apply_op(S shift, std::span<const S> x, std::span<S> y) const {
        const int n = A_.n_rows;
        if (transformed_) {
            work_.assign(x.begin(), x.end());
            lm_->solve_lower_trans(std::span<S>(work_));
            blas::spmv<S>(A_, std::span<const S>(work_.data(), work_.size()), y);
            lm_->solve_lower(y);
            for (int i = 0; i < n; ++i) y[i] += shift * x[i];
        } else {
            blas::spmv<S>(A_, x, y);
            if (shift != S{}) {
                work_.resize(static_cast<size_t>(n));
                blas::spmv<S>(M_, x, std::span<S>(work_));
                for (int i = 0; i < n; ++i) y[i] += shift * work_[static_cast<size_t>(i)];
            }
        }
    }

    ShiftedSolveResult<S> solve(S shift, const DenseMatrix<S>& rhs, double tau, std::uint64_t inject_seed = 0) {
        const int n = A_.n_rows, r = rhs.cols();
        ShiftedSolveResult<S> out;
        out.W = DenseMatrix<S>(n, r);
        out.R = DenseMatrix<S>(n, r);
        switch (cfg_.kind) {
            case InnerKind::Direct: solve_direct(shift, rhs, out, inject_seed); break;
            case InnerKind::BiCGstab: solve_iterative(shift, rhs, tau, out, /*use_minres=*/false); break;
            case InnerKind::Minres: {
                // a genuinely complex shift breaks symmetry; fall back
                const bool complex_shift = scalar_traits<S>::im(shift) != 0.0;
                solve_iterative(shift, rhs, tau, out, /*use_minres=*/!complex_shift);
                break;
            }
        }
        // recompute the block residual and its spectral norm
        std::vector<S> t(static_cast<size_t>(n));
        for (int c = 0; c < r; ++c) {
            apply_op(shift, out.W.col(c), std::span<S>(t));
            for (int i = 0; i < n; ++i) out.R(i, c) = rhs(i, c) - t[static_cast<size_t>(i)];
        }
        out.s_norm = spectral_norm_small(out.R);
        return out;
    }

    void clear_cache() {
        lu_cache_.clear();
        prec_cache_.clear();
    }

private:
    struct ShiftLess {
        bool operator()(const cplx& a, const cplx& b) const {
            if (a.real() != b.real()) return a.real() < b.real();
            return a.imag() < b.imag();
        }
    };

    void solve_direct(S shift, const DenseMatrix<S>& rhs, ShiftedSolveResult<S>& out, std::uint64_t inject_seed) {
        const int n = A_.n_rows, r = rhs.cols();
        if (n > cfg_.direct_limit)
            throw std::invalid_argument("direct inner solver limited to dimension " +
                                        std::to_string(cfg_.direct_limit));
        const DenseLU<S>& lu = direct_factor(shift);
        out.W = rhs;
        lu.solve_in_place(out.W);
        out.iterations = 0;
        if (cfg_.forced_residual > 0.0) {
            // exact solve, then back off by Op^{-1} of a residual block of
            // exactly the requested spectral norm
            DenseMatrix<S> dir(n, r);
            CounterRng rng(0xfeedULL ^ inject_seed);
            for (int c = 0; c < r; ++c)
                for (int i = 0; i < n; ++i) dir(i, c) = S(rng.gaussian());
            ThinQR<S> qr = thin_qr(dir);
            DenseMatrix<S> resid = scaled(qr.Q, S(cfg_.forced_residual));
            DenseMatrix<S> corr = resid;
            lu.solve_in_place(corr);
            for (int c = 0; c < r; ++c)
                for (int i = 0; i < n; ++i) out.W(i, c) -= corr(i, c);
        }
    }

    void solve_iterative(S shift, const DenseMatrix<S>& rhs, double tau, ShiftedSolveResult<S>& out, bool use_minres) {
        const int n = A_.n_rows, r = rhs.cols();
        const Preconditioner& prec = precond_for(shift);
        const double col_tau = tau / r;  // per-column budget keeps the block norm under tau
        auto op = [&](std::span<const S> x, std::span<S> y) { apply_op(shift, x, y); };
        auto pc = [&](std::span<S> x) {
            if (transformed_ && !lm_->is_identity()) {
                lm_->apply_lower(x);
                prec.apply(x);
                lm_->apply_lower_trans(x);
            } else {
                prec.apply(x);
            }
        };
        for (int c = 0; c < r; ++c) {
            std::vector<S> b(rhs.col(c).begin(), rhs.col(c).end());
            std::vector<S> x(static_cast<size_t>(n));
            LinearSolveReport rep;
            if (use_minres) {
                if constexpr (std::is_same_v<S, double>) {
                    rep = minres(n, op, std::span<const double>(b), pc, std::span<double>(x), col_tau, cfg_.maxit);
                } else {
                    rep = bicgstab<S>(n, op, std::span<const S>(b), pc, std::span<S>(x), col_tau, cfg_.maxit);
                }
            } else {
                rep = bicgstab<S>(n, op, std::span<const S>(b), pc, std::span<S>(x), col_tau, cfg_.maxit);
            }
            out.iterations += rep.iterations;
            out.converged = out.converged && rep.converged;
            out.breakdown = out.breakdown || rep.breakdown;
            for (int i = 0; i < n; ++i) out.W(i, c) = x[static_cast<size_t>(i)];
        }
    }

    const DenseLU<S>& direct_factor(S shift) {
        cplx key(scalar_traits<S>::re(shift), scalar_traits<S>::im(shift));
        auto it = lu_cache_.find(key);
        if (it != lu_cache_.end()) return *it->second;
        const int n = A_.n_rows;
        DenseMatrix<S> K(n, n);
        if (transformed_) {
            DenseReal Ad = to_dense(A_);
            DenseReal T1 = Ad;
            for (int j = 0; j < n; ++j) lm_->solve_lower(T1.col(j));  // Lm^{-1} A
            // right-multiply by Lm^{-T}: transpose, forward solve, transpose
            DenseReal T2(n, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) T2(i, j) = T1(j, i);
            for (int j = 0; j < n; ++j) lm_->solve_lower(T2.col(j));
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) K(i, j) = S(T2(j, i));
            for (int i = 0; i < n; ++i) K(i, i) += shift;
        } else {
            DenseReal Ad = to_dense(A_);
            DenseReal Md = to_dense(M_);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) K(i, j) = S(Ad(i, j)) + shift * S(Md(i, j));
        }
        auto lu = std::make_unique<DenseLU<S>>();
        lu->factor(std::move(K));
        auto [pos, ok] = lu_cache_.emplace(key, std::move(lu));
        (void)ok;
        return *pos->second;
    }

    const Preconditioner& precond_for(S shift) {
        const double re = scalar_traits<S>::re(shift);
        auto it = prec_cache_.find(re);
        if (it != prec_cache_.end()) return *it->second;
        auto P = std::make_unique<Preconditioner>();
        if (cfg_.precond != PrecondKind::None) {
            SparseMatrix K = add_scaled(A_, re, M_);
            if (cfg_.precond == PrecondKind::IC0 || cfg_.precond == PrecondKind::ICT) {
                // the shifted operators here are negative definite; factor the
                // negated matrix so the Cholesky pivots are positive
                double diag0 = 0.0;
                for (int p = K.row_ptr[0]; p < K.row_ptr[1]; ++p)
                    if (K.col_idx[p] == 0) diag0 = K.values[p];
                if (diag0 < 0.0)
                    for (auto& v : K.values) v = -v;
                *P = build_preconditioner(K, cfg_.precond, cfg_.droptol);
            } else {
                *P = build_preconditioner(K, cfg_.precond, cfg_.droptol);
            }
        } else {
            P->n = A_.n_rows;
        }
        auto [pos, ok] = prec_cache_.emplace(re, std::move(P));
        (void)ok;
        return *pos->second;
    }

    const SparseMatrix& A_;
    const SparseMatrix& M_;
    const MassFactor* lm_ = nullptr;
    bool transformed_ = false;
    InnerConfig cfg_;
    mutable std::vector<S> work_;
    std::map<cplx, std::unique_ptr<DenseLU<S>>, ShiftLess> lu_cache_;
    std::map<double, std::unique_ptr<Preconditioner>> prec_cache_;
};

inline InnerKind inner_kind_from_string(const std::string& s) {
    if (s == "direct") return InnerKind::Direct;
    if (s == "bicgstab") return InnerKind::BiCGstab;
    if (s == "minres") return InnerKind::Minres;
    throw std::invalid_argument("unknown inner solver: " + s);
}

inline std::string to_string(InnerKind k) {
    switch (k) {
        case InnerKind::Direct: return "direct";
        case InnerKind::BiCGstab: return "bicgstab";
        case InnerKind::Minres: return "minres";
    }
    return "?";
}

}  // namespace lyap
