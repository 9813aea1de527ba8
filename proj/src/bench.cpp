#include "lyap/bench.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lyap/verify.hpp"

namespace lyap {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value, const std::string& origin,
               long line) {
    auto bad = [&](const std::string& what) {
        throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
    };
    try {
        if (key == "problem") cfg.problem = value;
        else if (key == "grid_n") cfg.grid_n = std::stoi(value);
        else if (key == "n1") cfg.n1 = std::stoi(value);
        else if (key == "m_pairs") cfg.m_pairs = std::stoi(value);
        else if (key == "r") cfg.r = std::stoi(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "path_a") cfg.path_a = value;
        else if (key == "path_m") cfg.path_m = value;
        else if (key == "path_b") cfg.path_b = value;
        else if (key == "outer") cfg.outer = value;
        else if (key == "inner") cfg.inner = value;
        else if (key == "precond") cfg.precond = value;
        else if (key == "droptol") cfg.droptol = std::stod(value);
        else if (key == "maxit_inner") cfg.maxit_inner = std::stoi(value);
        else if (key == "direct_limit") cfg.direct_limit = std::stoi(value);
        else if (key == "stop") cfg.stop = value;
        else if (key == "tau") cfg.tau = std::stod(value);
        else if (key == "delta") cfg.delta = std::stod(value);
        else if (key == "tau_min") cfg.tau_min = std::stod(value);
        else if (key == "tau_max") cfg.tau_max = std::stod(value);
        else if (key == "eps_hat") cfg.eps_hat = std::stod(value);
        else if (key == "jmax") cfg.jmax = std::stoi(value);
        else if (key == "baseline") cfg.baseline = value;
        else bad("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
        bad("malformed value for '" + key + "'");
    }
}

}  // namespace

BenchSuite parse_suite_text(const std::string& text, const std::string& origin) {
    BenchSuite suite;
    ExperimentConfig global;
    std::optional<ExperimentConfig> current;
    std::istringstream in(text);
    std::string raw;
    long line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        const size_t hash = s.find('#');
        if (hash != std::string::npos) s = trim(s.substr(0, hash));
        if (s.empty()) continue;
        if (s.rfind("row", 0) == 0 && (s.size() == 3 || s[3] == ' ' || s[3] == '\t')) {
            if (current) suite.rows.push_back(*current);
            current = global;
            current->label = trim(s.substr(3));
            if (current->label.empty())
                throw std::runtime_error(origin + ":" + std::to_string(line) + ": row needs a label");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(line) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        apply_key(current ? *current : global, key, value, origin, line);
    }
    if (current) suite.rows.push_back(*current);
    return suite;
}

BenchSuite parse_suite_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_suite_text(buf.str(), path);
}

LyapunovProblem build_problem(const ExperimentConfig& cfg, double desk_scale) {
    auto scaled = [&](int v) { return std::max(1, static_cast<int>(std::lround(v * desk_scale))); };
    if (cfg.problem == "cd2d") return gen_cd2d(scaled(cfg.grid_n), cfg.r, cfg.seed);
    if (cfg.problem == "heat3d") return gen_heat3d(scaled(cfg.grid_n), cfg.r, cfg.seed);
    if (cfg.problem == "msd") return gen_msd(scaled(cfg.n1), cfg.m_pairs);
    if (cfg.problem == "mm")
        return load_matrix_market(cfg.path_a,
                                  cfg.path_m.empty() ? std::nullopt : std::optional<std::string>(cfg.path_m),
                                  cfg.path_b);
    throw std::invalid_argument("unknown problem kind: " + cfg.problem);
}

namespace {

InnerConfig inner_config(const ExperimentConfig& cfg) {
    InnerConfig ic;
    ic.kind = inner_kind_from_string(cfg.inner);
    ic.precond = precond_kind_from_string(cfg.precond);
    ic.droptol = cfg.droptol;
    ic.maxit = cfg.maxit_inner;
    ic.direct_limit = cfg.direct_limit;
    return ic;
}

}  // namespace

ResultRow run_experiment(const ExperimentConfig& cfg, double desk_scale, const std::string& trace_path) {
    LyapunovProblem prob = build_problem(cfg, desk_scale);
    ResultRow row;
    row.label = cfg.label.empty() ? cfg.problem : cfg.label;
    row.problem = prob.name + "(" + prob.params + ")";
    row.outer = cfg.outer;
    row.inner = cfg.inner;
    row.stop = cfg.stop;

    const auto t0 = std::chrono::steady_clock::now();
    SolverTrace trace;
    if (cfg.outer == "rksm") {
        RksmOptions o;
        o.eps_hat = cfg.eps_hat;
        o.jmax = cfg.jmax;
        o.inner = inner_config(cfg);
        o.policy.delta = cfg.delta;
        o.policy.tau_min = cfg.tau_min;
        o.policy.tau_max = cfg.tau_max;
        o.policy.fixed_tau = cfg.tau;
        if (cfg.stop == "fixed") o.policy.kind = RelaxPolicy::Kind::Fixed;
        else if (cfg.stop == "prac1") o.policy.kind = RelaxPolicy::Kind::Prac1;
        else if (cfg.stop == "prac2") o.policy.kind = RelaxPolicy::Kind::Prac2;
        else throw std::invalid_argument("stop '" + cfg.stop + "' is not available for the projection method");
        RksmResult res = rksm_solve(prob, o);
        row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.converged = res.converged;
        row.it_out = res.steps;
        row.dim = res.X.cols();
        row.res_comp_scaled = res.final_res_comp / res.b_norm2;
        std::visit(
            [&](const auto& run) {
                using RunT = std::decay_t<decltype(run)>;
                if constexpr (!std::is_same_v<RunT, std::monostate>) {
                    double rtrue;
                    if (run.n <= 2000)
                        rtrue = rksm_true_residual_dense(prob, run);
                    else
                        rtrue = rksm_true_residual_lanczos(prob, run).value;
                    row.delta_res_scaled = std::abs(rtrue - res.final_res_comp) / res.b_norm2;
                }
            },
            res.run);
        trace = res.trace;
    } else if (cfg.outer == "lradi") {
        AdiOptions o;
        o.eps_hat = cfg.eps_hat;
        o.jmax = cfg.jmax;
        o.inner = inner_config(cfg);
        o.policy.tau_min = cfg.tau_min;
        o.policy.tau_max = cfg.tau_max;
        o.policy.fixed_tau = cfg.tau;
        if (cfg.stop == "fixed") o.policy.kind = AdiRelaxPolicy::Kind::Fixed;
        else if (cfg.stop == "prac1") o.policy.kind = AdiRelaxPolicy::Kind::Prac1;
        else if (cfg.stop == "prac2") o.policy.kind = AdiRelaxPolicy::Kind::Prac2;
        else if (cfg.stop == "theo1") o.policy.kind = AdiRelaxPolicy::Kind::Theo1;
        else if (cfg.stop == "theo2") o.policy.kind = AdiRelaxPolicy::Kind::Theo2;
        else throw std::invalid_argument("unknown stop policy: " + cfg.stop);
        AdiResult res = lradi_solve(prob, o);
        row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.converged = res.converged;
        row.it_out = res.steps;
        row.dim = res.X.cols();
        row.res_comp_scaled = res.final_res_comp / res.b_norm2;
        std::visit(
            [&](const auto& run) {
                using RunT = std::decay_t<decltype(run)>;
                if constexpr (!std::is_same_v<RunT, std::monostate>) {
                    using Scalar = std::decay_t<decltype(run.Z(0, 0))>;
                    LowRankFactor internal;
                    internal.f = FactorT<Scalar>{run.Z, std::nullopt};
                    const double rtrue = true_residual_norm_lanczos(prob, internal).value;
                    row.delta_res_scaled = std::abs(rtrue - res.final_res_comp) / res.b_norm2;
                }
            },
            res.run);
        trace = res.trace;
    } else {
        throw std::invalid_argument("unknown outer method: " + cfg.outer);
    }
    if (cfg.inner != "direct") {
        row.it_in = trace.total_inner_iters();
        row.min_tau = trace.min_tau();
        row.max_tau = trace.max_tau();
    }
    if (!trace_path.empty()) trace.write_csv(trace_path);
    return row;
}

std::vector<ResultRow> run_suite(const BenchSuite& suite, const std::string& out_dir, double desk_scale, bool quiet) {
    std::vector<ResultRow> rows;
    for (const auto& cfg : suite.rows) {
        std::string trace_path;
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            trace_path = out_dir + "/trace_" + cfg.label + ".csv";
        }
        ResultRow row;
        try {
            row = run_experiment(cfg, desk_scale, trace_path);
        } catch (const std::exception& e) {
            // a failing row must not take the rest of the suite down
            row.label = cfg.label;
            row.problem = cfg.problem;
            row.outer = cfg.outer;
            row.inner = cfg.inner;
            row.stop = std::string("error: ") + e.what();
        }
        if (!quiet)
            std::fprintf(stderr, "[bench] %-18s %-6s %-9s %-6s it_out=%d it_in=%ld res=%.2e\n", row.label.c_str(),
                         row.outer.c_str(), row.inner.c_str(), row.stop.c_str(), row.it_out, row.it_in,
                         row.res_comp_scaled);
        rows.push_back(std::move(row));
    }
    // savings against the fixed-tolerance baseline with the same setup
    for (auto& row : rows) {
        if (row.it_in < 0 || row.stop == "fixed") continue;
        const ExperimentConfig* cfg = nullptr;
        for (const auto& c : suite.rows)
            if (c.label == row.label) cfg = &c;
        const ResultRow* base = nullptr;
        for (size_t i = 0; i < rows.size(); ++i) {
            const auto& cand = rows[i];
            if (cand.stop != "fixed" || cand.it_in < 0) continue;
            if (cfg && !cfg->baseline.empty()) {
                if (cand.label == cfg->baseline) base = &cand;
            } else if (cand.problem == row.problem && cand.outer == row.outer && cand.inner == row.inner) {
                base = &cand;
            }
        }
        if (base && base->it_in > 0)
            row.save_pct = 100.0 * (static_cast<double>(base->it_in) - static_cast<double>(row.it_in)) /
                           static_cast<double>(base->it_in);
    }
    if (!out_dir.empty()) {
        write_results_csv(out_dir + "/results.csv", rows);
        write_results_markdown(out_dir + "/results.md", rows);
    }
    return rows;
}

namespace {

std::string fmt_tau(double v) { return v > 0.0 ? [&] { char b[32]; std::snprintf(b, sizeof b, "%.1e", v); return std::string(b); }() : std::string(""); }

std::string fmt_it_out(const ResultRow& r) {
    return std::to_string(r.it_out) + (r.converged ? "" : "*");
}

}  // namespace

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "problem,outer,inner,stop,min_tau,max_tau,it_out,dim,res_comp,delta_res,it_in,save_pct,time_s\n");
    for (const auto& r : rows) {
        std::fprintf(f, "%s,%s,%s,%s,%s,%s,%s,%d,%.17g,%.17g,", r.problem.c_str(), r.outer.c_str(), r.inner.c_str(),
                     r.stop.c_str(), fmt_tau(r.min_tau).c_str(), fmt_tau(r.max_tau).c_str(), fmt_it_out(r).c_str(),
                     r.dim, r.res_comp_scaled, r.delta_res_scaled);
        if (r.it_in >= 0)
            std::fprintf(f, "%ld,", r.it_in);
        else
            std::fprintf(f, ",");
        if (r.save_pct)
            std::fprintf(f, "%.1f,", *r.save_pct);
        else
            std::fprintf(f, ",");
        std::fprintf(f, "%.3f\n", r.time_s);
    }
    std::fclose(f);
}

void write_results_markdown(const std::string& path, const std::vector<ResultRow>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "| problem | outer | inner | stop | min tau | max tau | it_out | dim | res_comp | delta_res | "
                    "it_in | save%% | time s |\n");
    std::fprintf(f, "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for (const auto& r : rows) {
        char resbuf[32], dresbuf[32];
        std::snprintf(resbuf, sizeof resbuf, "%.1e", r.res_comp_scaled);
        std::snprintf(dresbuf, sizeof dresbuf, "%.1e", r.delta_res_scaled);
        std::fprintf(f, "| %s | %s | %s | %s | %s | %s | %s | %d | %s | %s | %s | %s | %.2f |\n", r.problem.c_str(),
                     r.outer.c_str(), r.inner.c_str(), r.stop.c_str(),
                     r.min_tau > 0 ? fmt_tau(r.min_tau).c_str() : "--", r.max_tau > 0 ? fmt_tau(r.max_tau).c_str() : "--",
                     fmt_it_out(r).c_str(), r.dim, resbuf, dresbuf,
                     r.it_in >= 0 ? std::to_string(r.it_in).c_str() : "--",
                     r.save_pct ? [&] { char b[16]; std::snprintf(b, sizeof b, "%.1f", *r.save_pct); return std::string(b); }().c_str() : "--",
                     r.time_s);
    }
    std::fclose(f);
}

}  // namespace lyap
