#pragma once

#include <chrono>
#include <variant>

#include "lyap/factor.hpp"
#include "lyap/inner.hpp"
#include "lyap/ortho.hpp"
#include "lyap/policy.hpp"
#include "lyap/problems.hpp"
#include "lyap/shifts.hpp"
#include "lyap/trace.hpp"

namespace lyap {

struct RksmOptions {
    double eps_hat = 1e-8;
    int jmax = 50;
    RelaxPolicy policy;
    InnerConfig inner;
    ShiftSource shifts;
    bool record_history = false;  // keep linear residual blocks and per-step Y
    std::uint64_t inject_seed = 0x90abcdULL;
};

// Full internal state of a finished run, exposed for the verification
// oracles. Everything lives in the standard-form coordinates (the pencil is
// reduced by the mass Cholesky factors before projection).
template <class S>
struct RksmRun {
    int n = 0, r = 0, steps = 0;
    DenseMatrix<S> Q;       // n x (steps+1)*r
    DenseMatrix<S> H;       // (steps+1)*r x steps*r
    DenseMatrix<S> Texpl;   // (steps+1)*r square, leading steps*r block is the projection
    DenseMatrix<S> Timpl;   // steps*r square
    DenseMatrix<S> Y;       // steps*r square
    DenseMatrix<S> beta;    // r x r
    DenseMatrix<S> omega;   // r x (steps+1)*r, unnormalized left null row of the augmented H
    DenseMatrix<S> g;       // n x r
    DenseMatrix<S> S_hist;  // n x steps*r (when history was recorded)
    std::vector<cplx> shifts;
    std::vector<double> s_norms;
    std::vector<double> res_comp_hist;
    std::vector<double> gap_bound_hist;
    std::vector<double> g_norm_hist;
    std::vector<DenseMatrix<S>> Y_hist;
    bool history = false;
};

struct RksmResult {
    LowRankFactor X;
    SolverTrace trace;
    bool converged = false;
    bool deflated = false;
    bool inner_failed = false;
    int steps = 0;
    double b_norm2 = 0.0;  // squared spectral norm of the reduced right-hand side
    double final_res_comp = 0.0;
    double final_gap_bound = 0.0;
    std::variant<std::monostate, RksmRun<double>, RksmRun<cplx>> run;
};

namespace detail {

template <class S>
DenseMatrix<S> lyap_dense_generic(const DenseMatrix<S>& T, const DenseMatrix<S>& W) {
    if constexpr (std::is_same_v<S, cplx>) {
        return lyap_dense(T, W);
    } else {
        return lyap_dense_real(T, W);
    }
}

template <class S>
DenseMatrix<S> plain_transpose(const DenseMatrix<S>& A) {
    DenseMatrix<S> T(A.cols(), A.rows());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i) T(j, i) = A(i, j);
    return T;
}

// X = B * H^{-1} solved through H^T X^T = B^T
template <class S>
DenseMatrix<S> right_divide(const DenseMatrix<S>& B, const DenseMatrix<S>& H) {
    DenseLU<S> lu;
    lu.factor(plain_transpose(H));
    DenseMatrix<S> Xt = plain_transpose(B);
    lu.solve_in_place(Xt);
    return plain_transpose(Xt);
}

inline bool conjugate_pairs_closed(const std::vector<cplx>& shifts, double tol = 1e-12) {
    for (size_t i = 0; i < shifts.size();) {
        if (std::abs(shifts[i].imag()) <= tol * (1.0 + std::abs(shifts[i]))) {
            ++i;
            continue;
        }
        if (i + 1 >= shifts.size()) return false;
        if (std::abs(shifts[i + 1] - std::conj(shifts[i])) > 1e-10 * (1.0 + std::abs(shifts[i]))) return false;
        i += 2;
    }
    return true;
}

enum class StepStatus { Ok, Converged, NeedComplex, Deflated, InnerFailed };

template <class S>
class RksmEngine {
public:
    RksmEngine(const SparseMatrix& A, const SparseMatrix& At, const SparseMatrix& M, const MassFactor& lm,
               const RksmOptions& opts)
        : A_(A), At_(At), lm_(lm), opts_(opts), solver_(A, M, &lm, /*transformed=*/true, opts.inner) {}

    // reduced right-hand side B_M = L^{-1} B
    void init(const DenseReal& BM) {
        run_.n = BM.rows();
        run_.r = BM.cols();
        run_.history = opts_.record_history;
        DenseMatrix<S> B0(BM.rows(), BM.cols());
        for (int j = 0; j < BM.cols(); ++j)
            for (int i = 0; i < BM.rows(); ++i) B0(i, j) = S(BM(i, j));
        ThinQR<S> qr = thin_qr(B0);
        if (qr.rank_deficient) deflated_ = true;
        basis_.block_size = run_.r;
        basis_.Q = qr.Q;
        run_.beta = qr.R;
        eps_abs_ = opts_.eps_hat * std::pow(spectral_norm_small(run_.beta), 2);
        run_.omega = DenseMatrix<S>::identity(run_.r);
        // projection seed: T over the first block
        DenseMatrix<S> aq0(run_.n, run_.r);
        apply_AM(qr.Q, aq0);
        run_.Texpl = blas::matmul_ch(qr.Q, aq0);
        // spectral-region seeds: the large end from power iteration, the
        // small end from inverse iteration through the inner solver, so the
        // pole candidates cover the whole mirrored spectrum estimate
        region_seed_ = power_lambda_max(run_.n, [&](std::span<const double> x, std::span<double> y) {
            std::vector<S> xs(x.begin(), x.end()), ys(static_cast<size_t>(run_.n));
            apply_AM_vec(std::span<const S>(xs.data(), xs.size()), std::span<S>(ys));
            for (int i = 0; i < run_.n; ++i) y[i] = scalar_traits<S>::re(ys[static_cast<size_t>(i)]);
        });
        region_seed_small_ = region_seed_ * 1e-4;
        try {
            DenseMatrix<S> v(run_.n, 1);
            CounterRng rng(0x51a11ULL);
            for (int i = 0; i < run_.n; ++i) v(i, 0) = S(rng.uniform_symmetric());
            double lam = 1.0;
            for (int it = 0; it < 8; ++it) {
                auto sol = solver_.solve(S{}, v, 1e-3 * blas::nrm2<S>(v.col(0)), 0);
                lam = blas::nrm2<S>(sol.W.col(0)) / blas::nrm2<S>(v.col(0));
                v = sol.W;
                const double nv = blas::nrm2<S>(v.col(0));
                if (nv == 0.0) break;
                for (int i = 0; i < run_.n; ++i) v(i, 0) /= S(nv);
            }
            if (lam > 0.0) region_seed_small_ = 1.0 / lam;
        } catch (const std::exception&) {
            // keep the fallback small seed
        }
        prev_shift_ = cplx(region_seed_, 0.0);
    }

    double eps_abs() const { return eps_abs_; }
    const RksmRun<S>& run() const { return run_; }
    RksmRun<S>& run() { return run_; }
    SolverTrace& trace() { return trace_; }
    bool deflated() const { return deflated_; }

    StepStatus step() {
        const auto t0 = std::chrono::steady_clock::now();
        const int r = run_.r, k = run_.steps + 1, kr = k * r;
        // projected solve on the current basis
        DenseMatrix<S> Tk = run_.Texpl.block(0, 0, kr, kr);
        DenseMatrix<S> Bp(kr, r);
        Bp.set_block(0, 0, run_.beta);
        DenseMatrix<S> W = blas::matmul(Bp, conj_transpose(Bp));
        DenseMatrix<S> Yk = lyap_dense_generic<S>(Tk, W);

        const double tau = next_tau(k, Yk);
        cplx xi = next_shift(Tk);
        if constexpr (!scalar_traits<S>::is_complex) {
            if (std::abs(xi.imag()) > 1e-12 * (1.0 + std::abs(xi))) {
                promote_shift_ = xi;
                return StepStatus::NeedComplex;
            }
            xi = cplx(xi.real(), 0.0);
        }
        run_.Y = Yk;

        // shifted solve on the last basis block
        DenseMatrix<S> rhs = basis_.Q.block(0, (k - 1) * r, run_.n, r);
        const S shift = shift_value(xi);
        ShiftedSolveResult<S> sol = solver_.solve(S(-shift), rhs, tau, opts_.inject_seed + k);
        if (sol.breakdown || (!sol.converged && opts_.inner.kind != InnerKind::Direct && sol.s_norm > tau * 10)) {
            inner_failed_ = true;
        }
        run_.s_norms.push_back(sol.s_norm);
        if (run_.history) {
            run_.S_hist.resize_preserve(run_.n, kr);
            run_.S_hist.set_block(0, (k - 1) * r, sol.R);
        }

        GramSchmidtResult<S> gs = gram_schmidt_extend(basis_, sol.W);
        run_.Q = basis_.Q;
        run_.H.resize_preserve((k + 1) * r, kr);
        run_.H.set_block(0, (k - 1) * r, gs.h);
        run_.shifts.push_back(xi);
        used_poles_.push_back(xi);
        // breakdown is not repaired, but the residual is still evaluated: an
        // invariant subspace legitimately ends with a (near) zero residual
        const bool deflated_now = gs.rank_deficient;
        if (deflated_now) deflated_ = true;
        DenseMatrix<S> h_sub = gs.h.block(kr, 0, r, r);
        DenseMatrix<S> q_new = basis_.Q.block(0, kr, run_.n, r);

        // one multiply with the reduced operator and one with its adjoint
        DenseMatrix<S> Aq(run_.n, r), zq(run_.n, r);
        apply_AM(q_new, Aq);
        apply_AMT(q_new, zq);
        DenseMatrix<S> Qk = basis_.Q.block(0, 0, run_.n, kr);
        DenseMatrix<S> c_col = blas::matmul_ch(Qk, Aq);  // kr x r
        run_.Texpl.resize_preserve((k + 1) * r, (k + 1) * r);
        run_.Texpl.set_block(0, kr, c_col);
        DenseMatrix<S> c_rowt = blas::matmul_ch(Qk, zq);  // kr x r, row block is its adjoint
        run_.Texpl.set_block(kr, 0, conj_transpose(c_rowt));
        run_.Texpl.set_block(kr, kr, blas::matmul_ch(q_new, Aq));

        // residual direction block g = xi q_new - (I - Qk Qk^*) A q_new
        run_.g = DenseMatrix<S>(run_.n, r);
        DenseMatrix<S> proj = blas::matmul(Qk, c_col);
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < run_.n; ++i) run_.g(i, c) = shift * q_new(i, c) - Aq(i, c) + proj(i, c);
        ThinQR<S> gqr = thin_qr(run_.g);
        run_.g_norm_hist.push_back(spectral_norm_small(gqr.R));

        // Hessenberg-based projection, kept alongside the explicit one
        DenseMatrix<S> Hk = run_.H.block(0, 0, kr, kr);
        {
            DenseMatrix<S> N = DenseMatrix<S>::identity(kr);
            for (int col = 0; col < k; ++col)
                for (int i = 0; i < kr; ++i)
                    for (int c = 0; c < r; ++c) N(i, col * r + c) += run_.H(i, col * r + c) * shift_value(run_.shifts[static_cast<size_t>(col)]);
            DenseMatrix<S> corr = blas::matmul(c_col, h_sub);
            for (int c = 0; c < r; ++c)
                for (int i = 0; i < kr; ++i) N(i, (k - 1) * r + c) -= corr(i, c);
            run_.Timpl = right_divide(N, Hk);
        }

        if (!deflated_now) extend_omega(h_sub, k);

        // computed residual and the running gap bound
        DenseMatrix<S> HinvY = dense_lu_solve(Hk, run_.Y);
        DenseMatrix<S> lastrow = HinvY.block((k - 1) * r, 0, r, kr);
        DenseMatrix<S> crow = blas::matmul(h_sub, lastrow);
        const double res_comp = spectral_norm_small(blas::matmul(gqr.R, crow));
        double gap = 0.0;
        for (int i = 0; i < k; ++i)
            gap += run_.s_norms[static_cast<size_t>(i)] * spectral_norm_small(HinvY.block(i * r, 0, r, kr));
        run_.res_comp_hist.push_back(res_comp);
        run_.gap_bound_hist.push_back(gap);
        if (run_.history) run_.Y_hist.push_back(run_.Y);

        Y_prev_ = run_.Y;
        h_sub_prev_ = h_sub;
        run_.steps = k;

        TraceRow row;
        row.j = k;
        row.shift = xi;
        row.tau = tau;
        row.inner_iters = sol.iterations;
        row.s_norm = sol.s_norm;
        row.res_comp = res_comp;
        row.gap_bound = gap;
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        trace_.rows.push_back(row);

        if (inner_failed_) return StepStatus::InnerFailed;
        // an open conjugate pair is closed before stopping so the returned
        // factor can be made real; breakdown makes further steps impossible
        if (res_comp <= eps_abs_ && (!pending_conj_ || deflated_now)) return StepStatus::Converged;
        if (deflated_now) return StepStatus::Deflated;
        return StepStatus::Ok;
    }

    // promotion support
    cplx promote_shift() const { return promote_shift_; }
    cplx prev_shift_value() const { return prev_shift_; }
    double region_seed() const { return region_seed_; }
    double region_seed_small() const { return region_seed_small_; }
    const std::vector<cplx>& used_poles() const { return used_poles_; }
    const OrthoBasis<S>& basis() const { return basis_; }
    const DenseMatrix<S>& Y_prev() const { return Y_prev_; }
    const DenseMatrix<S>& h_sub_prev() const { return h_sub_prev_; }
    SolverTrace&& take_trace() { return std::move(trace_); }

    void adopt(const OrthoBasis<S>& basis, RksmRun<S> run, DenseMatrix<S> yprev, DenseMatrix<S> hsubprev,
               std::vector<cplx> used, cplx prev_shift, double seed, double seed_small, std::optional<cplx> forced,
               SolverTrace tr, double eps_abs) {
        basis_ = basis;
        run_ = std::move(run);
        Y_prev_ = std::move(yprev);
        h_sub_prev_ = std::move(hsubprev);
        used_poles_ = std::move(used);
        prev_shift_ = prev_shift;
        region_seed_ = seed;
        region_seed_small_ = seed_small;
        forced_shift_ = forced;
        if (forced && std::abs(forced->imag()) > 1e-12 * (1.0 + std::abs(*forced)))
            pending_conj_ = std::conj(*forced);
        trace_ = std::move(tr);
        eps_abs_ = eps_abs;
    }

private:
    void apply_AM_vec(std::span<const S> x, std::span<S> y) const {
        std::vector<S> t(x.begin(), x.end());
        lm_.solve_lower_trans(std::span<S>(t));
        blas::spmv<S>(A_, std::span<const S>(t.data(), t.size()), y);
        lm_.solve_lower(y);
    }
    void apply_AM(const DenseMatrix<S>& X, DenseMatrix<S>& Y) const {
        for (int c = 0; c < X.cols(); ++c) apply_AM_vec(X.col(c), Y.col(c));
    }
    void apply_AMT(const DenseMatrix<S>& X, DenseMatrix<S>& Y) const {
        for (int c = 0; c < X.cols(); ++c) {
            std::vector<S> t(X.col(c).begin(), X.col(c).end());
            lm_.solve_lower_trans(std::span<S>(t));
            blas::spmv<S>(At_, std::span<const S>(t.data(), t.size()), Y.col(c));
            lm_.solve_lower(Y.col(c));
        }
    }

    static S shift_value(cplx xi) {
        if constexpr (scalar_traits<S>::is_complex)
            return xi;
        else
            return xi.real();
    }

    double next_tau(int k, const DenseMatrix<S>& Yk) {
        const RelaxPolicy& p = opts_.policy;
        const double eps = p.eps_override > 0.0 ? p.eps_override : eps_abs_;
        switch (p.kind) {
            case RelaxPolicy::Kind::Fixed: return p.fixed_tau;
            case RelaxPolicy::Kind::Prac1: {
                if (k == 1) return clamp_tau(p.delta * eps / opts_.jmax, p.tau_min, p.tau_max);
                DenseMatrix<S> Hkm1 = run_.H.block(0, 0, (k - 1) * run_.r, (k - 1) * run_.r);
                return rksm_prac1_tau(Hkm1, h_sub_prev_, Y_prev_, eps, p.delta, opts_.jmax, run_.r, p.tau_min,
                                      p.tau_max);
            }
            case RelaxPolicy::Kind::Prac2: {
                if (k == 1) return clamp_tau(p.delta * eps / opts_.jmax, p.tau_min, p.tau_max);
                DenseMatrix<S> Hkm1 = run_.H.block(0, 0, (k - 1) * run_.r, (k - 1) * run_.r);
                return rksm_prac2_tau(Hkm1, h_sub_prev_, Yk, eps, p.delta, opts_.jmax, run_.r, p.tau_min, p.tau_max);
            }
        }
        return p.fixed_tau;
    }

    cplx next_shift(const DenseMatrix<S>& Tk) {
        if (forced_shift_) {
            const cplx v = *forced_shift_;
            forced_shift_.reset();
            prev_shift_ = v;
            return v;
        }
        if (opts_.shifts.kind == ShiftSource::Kind::UserList) {
            const cplx v = opts_.shifts.user[user_idx_ % opts_.shifts.user.size()];
            ++user_idx_;
            prev_shift_ = v;
            return v;
        }
        if (pending_conj_) {
            const cplx v = *pending_conj_;
            pending_conj_.reset();
            prev_shift_ = v;
            return v;
        }
        std::vector<cplx> ritz;
        {
            DenseCplx Tc(Tk.rows(), Tk.cols());
            for (int j = 0; j < Tk.cols(); ++j)
                for (int i = 0; i < Tk.rows(); ++i)
                    Tc(i, j) = cplx(scalar_traits<S>::re(Tk(i, j)), scalar_traits<S>::im(Tk(i, j)));
            ritz = eigenvalues(Tc);
        }
        std::vector<cplx> mirrored;
        mirrored.emplace_back(region_seed_, 0.0);
        if (region_seed_small_ > 0.0) mirrored.emplace_back(region_seed_small_, 0.0);
        for (const cplx& t : ritz)
            if (t.real() < 0.0) mirrored.push_back(-t);
        std::vector<cplx> cands = region_boundary(mirrored);
        cplx xi = adaptive_shift_argmax(mirrored, used_poles_, cands, prev_shift_);
#ifdef LYAP_SHIFT_DEBUG
        {
            double lo = 1e300, hi = -1e300, clo = 1e300, chi = -1e300;
            for (const cplx& m : mirrored) { lo = std::min(lo, m.real()); hi = std::max(hi, m.real()); }
            for (const cplx& c : cands) { clo = std::min(clo, c.real()); chi = std::max(chi, c.real()); }
            std::fprintf(stderr, "[shift] mirr[%zu] re %.3e..%.3e cand[%zu] re %.3e..%.3e -> (%.3e,%.3e)\n",
                         mirrored.size(), lo, hi, cands.size(), clo, chi, xi.real(), xi.imag());
        }
#endif
        if (std::abs(xi.imag()) <= 1e-12 * (1.0 + std::abs(xi))) {
            xi = cplx(xi.real(), 0.0);
        } else {
            xi = cplx(xi.real(), std::abs(xi.imag()));  // canonical member first
            pending_conj_ = std::conj(xi);
        }
        prev_shift_ = xi;
        return xi;
    }

    void extend_omega(const DenseMatrix<S>& h_sub, int k) {
        const int r = run_.r, kr = k * r;
        DenseMatrix<S> hcol = run_.H.block(0, (k - 1) * r, kr, r);
        DenseMatrix<S> prod = blas::matmul(run_.omega, hcol);  // r x r
        // new block solves  omega_new * h_sub = -prod
        DenseMatrix<S> rhs(r, r);
        for (int j = 0; j < r; ++j)
            for (int i = 0; i < r; ++i) rhs(i, j) = -prod(i, j);
        DenseMatrix<S> wnew = right_divide(rhs, h_sub);
        DenseMatrix<S> grown(r, kr + r);
        grown.set_block(0, 0, run_.omega);
        grown.set_block(0, kr, wnew);
        run_.omega = std::move(grown);
        // keep magnitudes representable; powers of two preserve null rows exactly
        const double m = max_abs(run_.omega);
        if (m > 1e100 || (m > 0 && m < 1e-100)) {
            const double sc = std::ldexp(1.0, -static_cast<int>(std::lround(std::log2(m))));
            for (int j = 0; j < run_.omega.cols(); ++j)
                for (int i = 0; i < r; ++i) run_.omega(i, j) *= S(sc);
        }
    }

    static DenseMatrix<S> dense_lu_solve(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
        DenseLU<S> lu;
        lu.factor(A);
        return lu.solve(B);
    }

    const SparseMatrix& A_;
    const SparseMatrix& At_;
    const MassFactor& lm_;
    RksmOptions opts_;
    ShiftedSolver<S> solver_;
    OrthoBasis<S> basis_;
    RksmRun<S> run_;
    SolverTrace trace_;
    DenseMatrix<S> Y_prev_;
    DenseMatrix<S> h_sub_prev_;
    std::vector<cplx> used_poles_;
    std::optional<cplx> pending_conj_;
    std::optional<cplx> forced_shift_;
    cplx prev_shift_{1.0, 0.0};
    cplx promote_shift_{};
    double region_seed_ = 1.0;
    double region_seed_small_ = 0.0;
    double eps_abs_ = 0.0;
    size_t user_idx_ = 0;
    bool deflated_ = false;
    bool inner_failed_ = false;
};

template <class SFrom, class STo>
DenseMatrix<STo> convert_matrix(const DenseMatrix<SFrom>& A) {
    DenseMatrix<STo> out(A.rows(), A.cols());
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i)
            out(i, j) = STo(scalar_traits<SFrom>::re(A(i, j)), scalar_traits<SFrom>::im(A(i, j)));
    return out;
}

inline RksmRun<cplx> promote_run(const RksmRun<double>& r) {
    RksmRun<cplx> out;
    out.n = r.n;
    out.r = r.r;
    out.steps = r.steps;
    out.Q = convert_matrix<double, cplx>(r.Q);
    out.H = convert_matrix<double, cplx>(r.H);
    out.Texpl = convert_matrix<double, cplx>(r.Texpl);
    out.Timpl = convert_matrix<double, cplx>(r.Timpl);
    out.Y = convert_matrix<double, cplx>(r.Y);
    out.beta = convert_matrix<double, cplx>(r.beta);
    out.omega = convert_matrix<double, cplx>(r.omega);
    out.g = convert_matrix<double, cplx>(r.g);
    out.S_hist = convert_matrix<double, cplx>(r.S_hist);
    out.shifts = r.shifts;
    out.s_norms = r.s_norms;
    out.res_comp_hist = r.res_comp_hist;
    out.gap_bound_hist = r.gap_bound_hist;
    out.g_norm_hist = r.g_norm_hist;
    for (const auto& y : r.Y_hist) out.Y_hist.push_back(convert_matrix<double, cplx>(y));
    out.history = r.history;
    return out;
}

}  // namespace detail

RksmResult rksm_solve(const LyapunovProblem& prob, const RksmOptions& opts);

}  // namespace lyap
