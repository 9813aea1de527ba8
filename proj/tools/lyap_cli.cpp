#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lyap/bench.hpp"
#include "lyap/mmio.hpp"
#include "lyap/verify.hpp"

using namespace lyap;

namespace {

int cmd_gen(const std::string& problem, int grid_n, int n1, int m_pairs, int r, std::uint64_t seed,
            const std::string& prefix) {
    ExperimentConfig cfg;
    cfg.problem = problem;
    cfg.grid_n = grid_n;
    cfg.n1 = n1;
    cfg.m_pairs = m_pairs;
    cfg.r = r;
    cfg.seed = seed;
    LyapunovProblem p = build_problem(cfg);
    write_matrix_market(prefix + "_A.mtx", p.A);
    write_matrix_market(prefix + "_M.mtx", p.M);
    write_matrix_market_dense(prefix + "_B.mtx", p.B);
    std::printf("%s: n=%d r=%d nnz(A)=%d -> %s_{A,M,B}.mtx\n", p.name.c_str(), p.dim(), p.rhs_cols(), p.A.nnz(),
                prefix.c_str());
    return 0;
}

int cmd_solve(ExperimentConfig cfg, const std::string& trace_path) {
    ResultRow row = run_experiment(cfg, 1.0, trace_path);
    std::printf("%s %s/%s stop=%s: it_out=%d%s dim=%d res_comp=%.3e delta_res=%.3e", row.problem.c_str(),
                row.outer.c_str(), row.inner.c_str(), row.stop.c_str(), row.it_out, row.converged ? "" : "*", row.dim,
                row.res_comp_scaled, row.delta_res_scaled);
    if (row.it_in >= 0) std::printf(" it_in=%ld", row.it_in);
    std::printf(" time=%.2fs\n", row.time_s);
    if (!trace_path.empty()) std::printf("trace written to %s\n", trace_path.c_str());
    return row.converged ? 0 : 1;
}

int cmd_bench(const std::string& config, const std::string& out, std::uint64_t seed, double desk_scale) {
    BenchSuite suite = parse_suite_file(config);
    for (auto& rowcfg : suite.rows)
        if (seed != 0) rowcfg.seed = seed;
    std::vector<ResultRow> rows = run_suite(suite, out, desk_scale);
    std::printf("%zu rows -> %s/results.{csv,md}\n", rows.size(), out.c_str());
    bool all = true;
    for (const auto& r : rows) all = all && r.converged;
    return all ? 0 : 1;
}

int cmd_verify(const std::string& which, const std::string& out) {
    std::filesystem::create_directories(out);
    CheckReport total;
    CounterRng rng(20240805ULL);
    if (which == "lemma5" || which == "all") {
        CheckReport rep;
        int done = 0;
        for (int trial = 0; done < 100 && trial < 300; ++trial) {
            const int j = 12;
            DenseReal H(j + 1, j);
            for (int c = 0; c < j; ++c)
                for (int i = 0; i <= std::min(c + 1, j); ++i) H(i, c) = rng.gaussian();
            for (int i = 1; i <= j; ++i) H(i, i - 1) = (H(i, i - 1) >= 0 ? 0.5 : -0.5) + H(i, i - 1);
            CheckReport one = lemma5_check(H);
            if (one.items.size() == 1 && one.items[0].name == "cond_guard_skip") continue;
            ++done;
            rep.merge(one);
        }
        std::printf("lemma5: %d trials, %s\n", done, rep.all_pass() ? "all passed" : "FAILURES");
        total.merge(rep);
    }
    if (which == "rksm" || which == "all") {
        LyapunovProblem p = gen_cd2d(20, 1, 7);
        RksmOptions o;
        o.inner.kind = InnerKind::Direct;
        o.inner.forced_residual = 1e-6;
        o.record_history = true;
        o.eps_hat = 1e-9;
        RksmResult res = rksm_solve(p, o);
        std::visit(
            [&](const auto& run) {
                using RunT = std::decay_t<decltype(run)>;
                if constexpr (!std::is_same_v<RunT, std::monostate>) {
                    CheckReport rep = rksm_identity_checks(p, run);
                    std::printf("rksm identities (cd2d n=%d): %s\n", p.dim(),
                                rep.all_pass() ? "all passed" : "FAILURES");
                    total.merge(rep);
                }
            },
            res.run);
    }
    if (which == "adi" || which == "all") {
        LyapunovProblem p = gen_cd2d(20, 1, 8);
        AdiOptions o;
        o.inner.kind = InnerKind::Direct;
        o.inner.forced_residual = 1e-6;
        o.record_history = true;
        o.eps_hat = 1e-9;
        AdiResult res = lradi_solve(p, o);
        std::visit(
            [&](const auto& run) {
                using RunT = std::decay_t<decltype(run)>;
                if constexpr (!std::is_same_v<RunT, std::monostate>) {
                    CheckReport rep = adi_identity_checks(p, run, 600);
                    std::printf("adi identities (cd2d n=%d): %s\n", p.dim(), rep.all_pass() ? "all passed" : "FAILURES");
                    total.merge(rep);
                }
            },
            res.run);
    }
    if (which == "decay" || which == "all") {
        LyapunovProblem p = gen_cd2d(31, 1, 0);
        RksmOptions o;
        o.inner.kind = InnerKind::Direct;
        o.record_history = true;
        o.eps_hat = 1e-8;
        std::vector<cplx> shifts;
        for (int i = 0; i < 40; ++i) shifts.emplace_back(25.0 * std::pow(1.33, i % 18), 0.0);
        o.shifts = ShiftSource::list(shifts);
        RksmResult res = rksm_solve(p, o);
        const auto& run = std::get<RksmRun<double>>(res.run);
        DecayBoundReport rep = decay_bounds_check(p, run);
        std::printf("decay bounds (cd2d grid 31): %d checks, %d violations, min overestimation %.2f\n", rep.checks,
                    rep.violations, rep.min_overestimation);
        total.merge(rep.detail);
    }
    total.write_csv(out + "/verify_report.csv");
    std::ofstream txt(out + "/verify_report.txt");
    txt << total.to_text();
    std::printf("%s\n", total.all_pass() ? "verification PASSED" : "verification FAILED");
    return total.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-rank Lyapunov solvers: projection and low-rank alternating-directions methods with relaxed "
                 "inner solves"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate a test problem and write Matrix Market files");
    std::string g_problem = "cd2d", g_prefix = "problem";
    int g_grid = 20, g_n1 = 50, g_m = 2, g_r = 1;
    std::uint64_t g_seed = 0;
    gen->add_option("--problem", g_problem, "cd2d | heat3d | msd");
    gen->add_option("--grid-n", g_grid, "interior grid points per direction");
    gen->add_option("--n1", g_n1, "chain length for msd");
    gen->add_option("--m-pairs", g_m, "input pairs for msd");
    gen->add_option("--r", g_r, "right-hand-side columns");
    gen->add_option("--seed", g_seed, "right-hand-side seed");
    gen->add_option("--out-prefix", g_prefix, "output path prefix");

    auto* solve = app.add_subcommand("solve", "run one solver configuration");
    ExperimentConfig s_cfg;
    std::string s_trace;
    solve->add_option("--problem", s_cfg.problem, "cd2d | heat3d | msd | mm");
    solve->add_option("--grid-n", s_cfg.grid_n, "");
    solve->add_option("--n1", s_cfg.n1, "");
    solve->add_option("--m-pairs", s_cfg.m_pairs, "");
    solve->add_option("--r", s_cfg.r, "");
    solve->add_option("--seed", s_cfg.seed, "");
    solve->add_option("--matrix-a", s_cfg.path_a, "Matrix Market file for A (problem=mm)");
    solve->add_option("--matrix-m", s_cfg.path_m, "Matrix Market file for M (optional)");
    solve->add_option("--matrix-b", s_cfg.path_b, "Matrix Market file for B (problem=mm)");
    solve->add_option("--outer", s_cfg.outer, "rksm | lradi");
    solve->add_option("--inner", s_cfg.inner, "direct | bicgstab | minres");
    solve->add_option("--precond", s_cfg.precond, "none | jacobi | ilu0 | ilut | ic0 | ict");
    solve->add_option("--droptol", s_cfg.droptol, "");
    solve->add_option("--stop", s_cfg.stop, "fixed | prac1 | prac2 | theo1 | theo2");
    solve->add_option("--tau", s_cfg.tau, "fixed inner tolerance");
    solve->add_option("--delta", s_cfg.delta, "relaxation safeguard");
    solve->add_option("--eps-hat", s_cfg.eps_hat, "scaled residual target");
    solve->add_option("--jmax", s_cfg.jmax, "outer step limit");
    solve->add_option("--trace", s_trace, "write the per-step trace CSV here");

    auto* bench = app.add_subcommand("bench", "run an experiment suite from a config file");
    std::string b_config, b_out = "bench_out";
    std::uint64_t b_seed = 0;
    double b_scale = 1.0;
    bench->add_option("--config", b_config, "flat key = value suite file")->required();
    bench->add_option("--out", b_out, "output directory");
    bench->add_option("--seed", b_seed, "override the right-hand-side seed (0 keeps per-row seeds)");
    bench->add_option("--desk-scale", b_scale, "multiplies the generated problem sizes");

    auto* verify = app.add_subcommand("verify", "run the verification suites");
    std::string v_which = "all", v_out = "verify_out";
    verify->add_option("--suite", v_which, "lemma5 | rksm | adi | decay | all");
    verify->add_option("--out", v_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(g_problem, g_grid, g_n1, g_m, g_r, g_seed, g_prefix);
        if (solve->parsed()) return cmd_solve(s_cfg, s_trace);
        if (bench->parsed()) return cmd_bench(b_config, b_out, b_seed, b_scale);
        if (verify->parsed()) return cmd_verify(v_which, v_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
