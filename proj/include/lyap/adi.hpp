#pragma once

#include <chrono>
#include <variant>

#include "lyap/factor.hpp"
#include "lyap/inner.hpp"
#include "lyap/ortho.hpp"
#include "lyap/policy.hpp"
#include "lyap/problems.hpp"
#include "lyap/rksm.hpp"
#include "lyap/shifts.hpp"
#include "lyap/trace.hpp"

namespace lyap {

struct AdiOptions {
    double eps_hat = 1e-8;
    int jmax = 50;
    AdiRelaxPolicy policy;
    InnerConfig inner;
    ShiftSource shifts;
    bool record_history = false;  // keep residual factors and linear residual blocks
    std::uint64_t inject_seed = 0xad1ad1ULL;
};

template <class S>
struct AdiRun {
    int n = 0, r = 0, steps = 0;
    DenseMatrix<S> Z;  // n x steps*r, columns already scaled by gamma
    DenseMatrix<S> w;  // n x r residual factor
    std::vector<cplx> shifts;
    std::vector<double> gammas;
    std::vector<double> s_norms;
    std::vector<double> Mv_norms;
    std::vector<double> u_hist;  // gap-bound accumulator, u_0 = 0 prepended
    std::vector<double> res_comp_hist;
    DenseMatrix<S> S_hist;  // n x steps*r
    DenseMatrix<S> w_hist;  // n x (steps+1)*r, starts with w_0 = B
    bool history = false;
};

struct AdiResult {
    LowRankFactor X;
    SolverTrace trace;
    bool converged = false;
    bool inner_failed = false;
    int steps = 0;
    double b_norm2 = 0.0;
    double final_res_comp = 0.0;
    double final_gap_bound = 0.0;  // u at exit
    std::variant<std::monostate, AdiRun<double>, AdiRun<cplx>> run;
};

namespace detail {

template <class S>
class AdiEngine {
public:
    AdiEngine(const SparseMatrix& A, const SparseMatrix& M, const AdiOptions& opts)
        : A_(A), M_(M), opts_(opts), solver_(A, M, nullptr, /*transformed=*/false, opts.inner) {}

    void init(const DenseReal& B) {
        run_.n = B.rows();
        run_.r = B.cols();
        run_.history = opts_.record_history;
        run_.w = DenseMatrix<S>(run_.n, run_.r);
        for (int j = 0; j < run_.r; ++j)
            for (int i = 0; i < run_.n; ++i) run_.w(i, j) = S(B(i, j));
        run_.Z = DenseMatrix<S>(run_.n, 0);
        run_.u_hist.push_back(0.0);
        if (run_.history) run_.w_hist = run_.w;
        b_norm_ = spectral_norm_small(run_.w);
        eps_abs_ = opts_.eps_hat * b_norm_ * b_norm_;
        res_prev_ = b_norm_ * b_norm_;
        B0_ = B;
    }

    double eps_abs() const { return eps_abs_; }
    double b_norm2() const { return b_norm_ * b_norm_; }
    AdiRun<S>& run() { return run_; }
    const AdiRun<S>& run() const { return run_; }
    SolverTrace& trace() { return trace_; }
    double u() const { return u_; }

    StepStatus step() {
        const auto t0 = std::chrono::steady_clock::now();
        const int k = run_.steps + 1, r = run_.r;
        const cplx alpha = peek_shift();
        if constexpr (!scalar_traits<S>::is_complex) {
            if (std::abs(alpha.imag()) > 1e-12 * (1.0 + std::abs(alpha))) return StepStatus::NeedComplex;
        }
        if (alpha.real() >= 0.0) throw std::invalid_argument("adi: shift with nonnegative real part rejected");
        consume_shift();
        const double gamma2 = -2.0 * alpha.real();
        const double tau = next_tau(k, alpha, gamma2);

        const S shift = shift_value(alpha);
        ShiftedSolveResult<S> sol = solver_.solve(shift, run_.w, tau, opts_.inject_seed + k);
        if (sol.breakdown || (!sol.converged && opts_.inner.kind != InnerKind::Direct && sol.s_norm > tau * 10))
            inner_failed_ = true;
        run_.s_norms.push_back(sol.s_norm);
        if (run_.history) {
            run_.S_hist.resize_preserve(run_.n, k * r);
            run_.S_hist.set_block(0, (k - 1) * r, sol.R);
        }

        DenseMatrix<S> Mv = blas::spmv(M_, sol.W);
        const double mv_norm = spectral_norm_small(Mv);
        run_.Mv_norms.push_back(mv_norm);
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < run_.n; ++i) run_.w(i, c) -= S(2.0 * alpha.real()) * Mv(i, c);
        const double gamma = std::sqrt(gamma2);
        run_.gammas.push_back(gamma);
        run_.Z.resize_preserve(run_.n, k * r);
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < run_.n; ++i) run_.Z(i, (k - 1) * r + c) = S(gamma) * sol.W(i, c);
        run_.shifts.push_back(alpha);
        if (run_.history) {
            run_.w_hist.resize_preserve(run_.n, (k + 1) * r);
            run_.w_hist.set_block(0, k * r, run_.w);
        }

        u_ += gamma2 * mv_norm * sol.s_norm;
        run_.u_hist.push_back(u_);

        DenseMatrix<S> gram = blas::matmul_ch(run_.w, run_.w);
        const double res_comp = spectral_norm_small(gram);
        run_.res_comp_hist.push_back(res_comp);
        run_.steps = k;

        TraceRow row;
        row.j = k;
        row.shift = alpha;
        row.tau = tau;
        row.inner_iters = sol.iterations;
        row.s_norm = sol.s_norm;
        row.res_comp = res_comp;
        row.gap_bound = u_;
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        trace_.rows.push_back(row);

        res_prev_ = res_comp;
        if (inner_failed_) return StepStatus::InnerFailed;
        if (res_comp <= eps_abs_) return StepStatus::Converged;
        return StepStatus::Ok;
    }

    void adopt(AdiRun<S> run, std::vector<cplx> batch, size_t batch_pos, double u, double res_prev, SolverTrace tr,
               double eps_abs, double b_norm, DenseReal b0) {
        run_ = std::move(run);
        batch_ = std::move(batch);
        batch_pos_ = batch_pos;
        u_ = u;
        res_prev_ = res_prev;
        trace_ = std::move(tr);
        eps_abs_ = eps_abs;
        b_norm_ = b_norm;
        B0_ = std::move(b0);
    }

    const std::vector<cplx>& batch() const { return batch_; }
    size_t batch_pos() const { return batch_pos_; }
    double res_prev() const { return res_prev_; }
    double b_norm() const { return b_norm_; }
    const DenseReal& b0() const { return B0_; }
    SolverTrace&& take_trace() { return std::move(trace_); }

private:
    static S shift_value(cplx a) {
        if constexpr (scalar_traits<S>::is_complex)
            return a;
        else
            return a.real();
    }

    cplx peek_shift() {
        if (opts_.shifts.kind == ShiftSource::Kind::UserList) {
            return opts_.shifts.user[batch_pos_ % opts_.shifts.user.size()];
        }
        if (batch_pos_ >= batch_.size()) replenish();
        return batch_[batch_pos_];
    }
    void consume_shift() { ++batch_pos_; }

    void replenish() {
        const int r = run_.r;
        DenseReal U;
        if (run_.Z.cols() == 0) {
            U = orthonormal_span(B0_);
        } else {
            const int take = std::min(run_.Z.cols(), 10 * r);
            DenseMatrix<S> tail = run_.Z.block(0, run_.Z.cols() - take, run_.n, take);
            if constexpr (scalar_traits<S>::is_complex) {
                DenseReal W(run_.n, 2 * take);
                for (int j = 0; j < take; ++j)
                    for (int i = 0; i < run_.n; ++i) {
                        W(i, j) = tail(i, j).real();
                        W(i, take + j) = tail(i, j).imag();
                    }
                U = orthonormal_span(W);
            } else {
                U = orthonormal_span(tail);
            }
        }
        ProjectedShiftCandidates cand = projected_shift_candidates(A_, M_, U);
        // residual factor projected onto the same basis, used to rank the
        // candidates by their one-step damping
        DenseCplx wp(U.cols(), run_.r);
        for (int c = 0; c < run_.r; ++c)
            for (int i = 0; i < U.cols(); ++i) {
                S acc{};
                for (int row = 0; row < run_.n; ++row) acc += S(U(row, i)) * run_.w(row, c);
                wp(i, c) = cplx(scalar_traits<S>::re(acc), scalar_traits<S>::im(acc));
            }
        std::vector<cplx> next = adi_projection_shift_batch(cand, wp);
        if (next.empty()) {
            if (batch_.empty()) throw std::runtime_error("adi: no stable projected eigenvalues available for shifts");
            // reuse the previous batch
            batch_pos_ = 0;
            return;
        }
        batch_ = std::move(next);
        batch_pos_ = 0;
    }

    double next_tau(int k, cplx alpha, double gamma2) {
        const AdiRelaxPolicy& p = opts_.policy;
        const double eps = p.eps_override > 0.0 ? p.eps_override : eps_abs_;
        switch (p.kind) {
            case AdiRelaxPolicy::Kind::Fixed: return p.fixed_tau;
            case AdiRelaxPolicy::Kind::Prac1: return adi_prac1_tau(res_prev_, eps, opts_.jmax, p.tau_min, p.tau_max);
            case AdiRelaxPolicy::Kind::Prac2:
                return adi_prac2_tau(k, res_prev_, u_, eps, opts_.jmax, p.tau_min, p.tau_max);
            case AdiRelaxPolicy::Kind::Theo1:
                return adi_theo1_tau(std::sqrt(res_prev_), sigma_dense(alpha), gamma2, eps, opts_.jmax, p.tau_min,
                                     p.tau_max);
            case AdiRelaxPolicy::Kind::Theo2:
                return adi_theo2_tau(k, std::sqrt(res_prev_), sigma_dense(alpha), gamma2, u_, eps, opts_.jmax,
                                     p.tau_min, p.tau_max);
        }
        return p.fixed_tau;
    }

    // ||M (A + alpha M)^{-1}|| assembled densely; the guaranteed strategies
    // are restricted to small problems for this reason
    double sigma_dense(cplx alpha) {
        if (run_.n > opts_.policy.sigma_dense_limit)
            throw std::invalid_argument("adi theo policy: dense operator norm limited to dimension " +
                                        std::to_string(opts_.policy.sigma_dense_limit));
        const int n = run_.n;
        DenseReal Ad = to_dense(A_), Md = to_dense(M_);
        if (std::abs(alpha.imag()) <= 1e-14 * (1.0 + std::abs(alpha))) {
            DenseReal K(n, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) K(i, j) = Ad(i, j) + alpha.real() * Md(i, j);
            DenseLU<double> lu;
            lu.factor(std::move(K));
            DenseReal X = lu.solve(DenseReal::identity(n));
            DenseReal MX(n, n);
            blas::gemm_nn(1.0, Md, X, 0.0, MX);
            return spectral_norm_small(MX);
        }
        DenseCplx K(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) K(i, j) = cplx(Ad(i, j), 0.0) + alpha * Md(i, j);
        DenseLU<cplx> lu;
        lu.factor(std::move(K));
        DenseCplx X = lu.solve(DenseCplx::identity(n));
        DenseCplx MX(n, n);
        blas::gemm_nn(cplx(1, 0), to_complex(Md), X, cplx(0, 0), MX);
        return spectral_norm_small(MX);
    }

    const SparseMatrix& A_;
    const SparseMatrix& M_;
    AdiOptions opts_;
    ShiftedSolver<S> solver_;
    AdiRun<S> run_;
    SolverTrace trace_;
    DenseReal B0_;
    std::vector<cplx> batch_;
    size_t batch_pos_ = 0;
    double u_ = 0.0;
    double res_prev_ = 0.0;
    double eps_abs_ = 0.0;
    double b_norm_ = 0.0;
    bool inner_failed_ = false;
};

inline AdiRun<cplx> promote_run(const AdiRun<double>& r) {
    AdiRun<cplx> out;
    out.n = r.n;
    out.r = r.r;
    out.steps = r.steps;
    out.Z = convert_matrix<double, cplx>(r.Z);
    out.w = convert_matrix<double, cplx>(r.w);
    out.shifts = r.shifts;
    out.gammas = r.gammas;
    out.s_norms = r.s_norms;
    out.Mv_norms = r.Mv_norms;
    out.u_hist = r.u_hist;
    out.res_comp_hist = r.res_comp_hist;
    out.S_hist = convert_matrix<double, cplx>(r.S_hist);
    out.w_hist = convert_matrix<double, cplx>(r.w_hist);
    out.history = r.history;
    return out;
}

}  // namespace detail

AdiResult lradi_solve(const LyapunovProblem& prob, const AdiOptions& opts);

}  // namespace lyap
