#include "lyap/adi.hpp"

namespace lyap {

namespace {

using detail::AdiEngine;
using detail::StepStatus;

template <class S>
void finish_result(AdiResult& out, AdiRun<S> run) {
    out.steps = run.steps;
    if (!run.res_comp_hist.empty()) out.final_res_comp = run.res_comp_hist.back();
    out.final_gap_bound = run.u_hist.back();
    if constexpr (std::is_same_v<S, double>) {
        out.X.f = FactorT<double>{run.Z, std::nullopt};
        out.X.conjugate_closed = true;
    } else {
        if (detail::conjugate_pairs_closed(run.shifts)) {
            out.X.f = FactorT<double>{realify_gram(run.Z), std::nullopt};
            out.X.conjugate_closed = true;
        } else {
            out.X.f = FactorT<cplx>{run.Z, std::nullopt};
            out.X.conjugate_closed = false;
        }
    }
    out.run = std::move(run);
}

}  // namespace

AdiResult lradi_solve(const LyapunovProblem& prob, const AdiOptions& opts) {
    prob.check();
    opts.policy.check();
    AdiResult out;
    AdiEngine<double> eng(prob.A, prob.M, opts);
    eng.init(prob.B);
    out.b_norm2 = eng.b_norm2();
    std::optional<AdiEngine<cplx>> engc;

    StepStatus st = StepStatus::Ok;
    int steps = 0;
    while (steps < opts.jmax) {
        if (!engc) {
            st = eng.step();
            if (st == StepStatus::NeedComplex) {
                engc.emplace(prob.A, prob.M, opts);
                engc->adopt(detail::promote_run(eng.run()), eng.batch(), eng.batch_pos(), eng.u(), eng.res_prev(),
                            eng.take_trace(), eng.eps_abs(), eng.b_norm(), eng.b0());
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
        if (st == StepStatus::InnerFailed) {
            out.inner_failed = true;
            break;
        }
    }
    if (engc) {
        out.trace = engc->take_trace();
        finish_result(out, std::move(engc->run()));
    } else {
        out.trace = eng.take_trace();
        finish_result(out, std::move(eng.run()));
    }
    out.trace.converged = out.converged;
    out.trace.outer_steps = out.steps;
    return out;
}

}  // namespace lyap
