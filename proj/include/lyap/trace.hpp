#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/blas.hpp"

namespace lyap {

// One record per outer step. gap_bound carries the residual-gap bound the
// method maintains (the row-sum bound for the projection method, the
// accumulator for the low-rank iteration).
struct TraceRow {
    int j = 0;
    cplx shift{};
    double tau = 0.0;
    int inner_iters = 0;
    double s_norm = 0.0;
    double res_comp = 0.0;
    double gap_bound = 0.0;
    double wall_ms = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    bool converged = false;
    int outer_steps = 0;
    long total_inner_iters() const {
        long t = 0;
        for (const auto& r : rows) t += r.inner_iters;
        return t;
    }
    double min_tau() const {
        double m = 0.0;
        bool any = false;
        for (const auto& r : rows)
            if (r.tau > 0 && (!any || r.tau < m)) {
                m = r.tau;
                any = true;
            }
        return any ? m : 0.0;
    }
    double max_tau() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, r.tau);
        return m;
    }

    void write_csv(const std::string& path) const {
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
        std::fprintf(f, "j,shift_re,shift_im,tau_k,inner_iters,s_norm,res_comp,gap_bound,wall_ms\n");
        for (const auto& r : rows)
            std::fprintf(f, "%d,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.3f\n", r.j, r.shift.real(), r.shift.imag(),
                         r.tau, r.inner_iters, r.s_norm, r.res_comp, r.gap_bound, r.wall_ms);
        std::fclose(f);
    }
};

}  // namespace lyap
