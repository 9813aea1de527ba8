#include "lyap/rksm.hpp"

namespace lyap {

namespace {

using detail::RksmEngine;
using detail::StepStatus;

template <class S>
void finish_result(RksmResult& out, RksmRun<S> run, const MassFactor& lm, double eps_hat) {
    out.steps = run.steps;
    if (!run.res_comp_hist.empty()) out.final_res_comp = run.res_comp_hist.back();
    if (!run.gap_bound_hist.empty()) out.final_gap_bound = run.gap_bound_hist.back();
    out.b_norm2 = std::pow(spectral_norm_small(run.beta), 2);
    const int n = run.n, jr = run.steps * run.r;
    if (jr > 0 && run.Y.rows() == jr) {
        DenseMatrix<S> Qj = run.Q.block(0, 0, n, jr);
        if constexpr (std::is_same_v<S, double>) {
            DenseReal Z = Qj;
            lm.solve_lower_trans(Z);
            out.X.f = FactorT<double>{std::move(Z), run.Y};
            out.X.conjugate_closed = true;
        } else {
            if (detail::conjugate_pairs_closed(run.shifts)) {
                // conjugate-closed span: recompress onto a real basis
                DenseReal W(n, 2 * jr);
                for (int j = 0; j < jr; ++j)
                    for (int i = 0; i < n; ++i) {
                        W(i, j) = Qj(i, j).real();
                        W(i, jr + j) = Qj(i, j).imag();
                    }
                DenseReal U = orthonormal_span(W);
                DenseCplx C = blas::matmul_ch(to_complex(U), Qj);
                DenseCplx CY = blas::matmul(C, run.Y);
                DenseCplx Yc = blas::matmul(CY, conj_transpose(C));
                DenseReal Yr = real_part(Yc);
                for (int j = 0; j < Yr.cols(); ++j)
                    for (int i = 0; i < j; ++i) {
                        const double v = 0.5 * (Yr(i, j) + Yr(j, i));
                        Yr(i, j) = Yr(j, i) = v;
                    }
                lm.solve_lower_trans(U);
                out.X.f = FactorT<double>{std::move(U), std::move(Yr)};
                out.X.conjugate_closed = true;
            } else {
                DenseCplx Z = Qj;
                lm.solve_lower_trans(Z);
                out.X.f = FactorT<cplx>{std::move(Z), run.Y};
                out.X.conjugate_closed = false;
            }
        }
    }
    (void)eps_hat;
    out.run = std::move(run);
}

}  // namespace

RksmResult rksm_solve(const LyapunovProblem& prob, const RksmOptions& opts) {
    prob.check();
    opts.policy.check();
    MassFactor lm = MassFactor::build(prob.M);
    SparseMatrix At = transpose(prob.A);
    DenseReal BM = prob.B;
    lm.solve_lower(BM);

    RksmResult out;
    RksmEngine<double> eng(prob.A, At, prob.M, lm, opts);
    eng.init(BM);
    std::optional<RksmEngine<cplx>> engc;

    StepStatus st = StepStatus::Ok;
    int steps = 0;
    while (steps < opts.jmax) {
        if (!engc) {
            st = eng.step();
            if (st == StepStatus::NeedComplex) {
                engc.emplace(prob.A, At, prob.M, lm, opts);
                OrthoBasis<cplx> basis;
                basis.block_size = eng.basis().block_size;
                basis.Q = detail::convert_matrix<double, cplx>(eng.basis().Q);
                engc->adopt(basis, detail::promote_run(eng.run()),
                            detail::convert_matrix<double, cplx>(eng.Y_prev()),
                            detail::convert_matrix<double, cplx>(eng.h_sub_prev()), eng.used_poles(),
                            eng.prev_shift_value(), eng.region_seed(), eng.region_seed_small(), eng.promote_shift(),
                            eng.take_trace(), eng.eps_abs());
                continue;
            }
            steps = eng.run().steps;
        } else {
            st = engc->step();
            steps = engc->run().steps;
        }
        if (st == StepStatus::Converged) {
            out.converged = true;
            break;
        }
        if (st == StepStatus::Deflated) {
            out.deflated = true;
            break;
        }
        if (st == StepStatus::InnerFailed) {
            out.inner_failed = true;
            break;
        }
    }
    if (engc) {
        out.deflated = out.deflated || engc->deflated();
        out.trace = engc->take_trace();
        finish_result(out, std::move(engc->run()), lm, opts.eps_hat);
    } else {
        out.deflated = out.deflated || eng.deflated();
        out.trace = eng.take_trace();
        finish_result(out, std::move(eng.run()), lm, opts.eps_hat);
    }
    out.trace.converged = out.converged;
    out.trace.outer_steps = out.steps;
    return out;
}

}  // namespace lyap
