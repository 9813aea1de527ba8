#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lyap/adi.hpp"
#include "lyap/rksm.hpp"

namespace lyap {

// One experiment: a problem instance, an outer method, an inner solver and a
// stopping policy. Parsed from flat key = value text; see the README for the
// key list.
struct ExperimentConfig {
    std::string label;
    std::string problem = "cd2d";  // cd2d | heat3d | msd | mm
    int grid_n = 30;
    int n1 = 50;
    int m_pairs = 2;
    int r = 1;
    std::uint64_t seed = 0;
    std::string path_a, path_m, path_b;

    std::string outer = "rksm";  // rksm | lradi
    std::string inner = "direct";  // direct | bicgstab | minres
    std::string precond = "none";
    double droptol = 1e-3;
    int maxit_inner = 2000;
    int direct_limit = 2600;

    std::string stop = "fixed";  // fixed | prac1 | prac2 | theo1 | theo2
    double tau = 1e-10;
    double delta = 0.5;
    double tau_min = 1e-12;
    double tau_max = 0.1;

    double eps_hat = 1e-8;
    int jmax = 50;
    std::string baseline;  // label of the fixed-policy row for the savings column
};

struct ResultRow {
    std::string label;
    std::string problem;
    std::string outer;
    std::string inner;
    std::string stop;
    double min_tau = 0.0;  // zero means empty (direct rows)
    double max_tau = 0.0;
    int it_out = 0;
    bool converged = false;
    int dim = 0;
    double res_comp_scaled = 0.0;
    double delta_res_scaled = 0.0;  // |computed - true| / ||B||^2, from the oracle
    long it_in = -1;                // negative means empty
    std::optional<double> save_pct;
    double time_s = 0.0;
};

struct BenchSuite {
    std::vector<ExperimentConfig> rows;
};

BenchSuite parse_suite_file(const std::string& path);
BenchSuite parse_suite_text(const std::string& text, const std::string& origin = "<memory>");

LyapunovProblem build_problem(const ExperimentConfig& cfg, double desk_scale = 1.0);

// executes one row; the trace (when trace_path is nonempty) is written as CSV
ResultRow run_experiment(const ExperimentConfig& cfg, double desk_scale = 1.0, const std::string& trace_path = "");

// executes the suite sequentially, fills the savings column against each
// row's fixed baseline, and writes results.csv plus results.md (and one trace
// file per row) under out_dir when nonempty
std::vector<ResultRow> run_suite(const BenchSuite& suite, const std::string& out_dir, double desk_scale = 1.0,
                                 bool quiet = false);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
void write_results_markdown(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace lyap
