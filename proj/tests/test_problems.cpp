#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "lyap/eig.hpp"
#include "lyap/mmio.hpp"
#include "lyap/problems.hpp"

using namespace lyap;

TEST_CASE("cd2d single interior point has the pure diffusion diagonal") {
    LyapunovProblem p = gen_cd2d(1, 1, 0);
    CHECK(p.dim() == 1);
    CHECK(p.A.nnz() == 1);
    CHECK(p.A.values[0] == doctest::Approx(-16.0));  // -4/h^2 with h = 1/2
}

TEST_CASE("cd2d stencil count and stability of the symmetric part") {
    const int g = 31;
    LyapunovProblem p = gen_cd2d(g, 1, 7);
    CHECK(p.A.nnz() == 5 * g * g - 4 * g);
    // symmetric part equals the diffusion part, so it is negative definite
    const int n = p.dim();
    const SparseMatrix At = transpose(p.A);
    auto symop = [&](std::span<const double> x, std::span<double> y) {
        std::vector<double> t(static_cast<size_t>(n));
        blas::spmv<double>(p.A, x, y);
        blas::spmv<double>(At, x, std::span<double>(t));
        for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = 0.5 * (y[static_cast<size_t>(i)] + t[static_cast<size_t>(i)]);
    };
    LanczosResult lr = lanczos_extreme<double>(n, symop, 90, 1e-8);
    CHECK(lr.lambda_max < 0.0);
    // matches the analytic extreme of the Dirichlet Laplacian
    const double h = 1.0 / (g + 1);
    const double analytic = -(8.0 / (h * h)) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2);
    CHECK(lr.lambda_max == doctest::Approx(analytic).epsilon(1e-6));
}

TEST_CASE("cd2d generators are bytewise deterministic") {
    LyapunovProblem a = gen_cd2d(8, 2, 42), b = gen_cd2d(8, 2, 42);
    CHECK(a.A.values == b.A.values);
    REQUIRE(a.B.cols() == b.B.cols());
    for (int j = 0; j < a.B.cols(); ++j)
        for (int i = 0; i < a.B.rows(); ++i) CHECK(a.B(i, j) == b.B(i, j));
    LyapunovProblem c = gen_cd2d(8, 2, 43);
    CHECK(c.B(0, 0) != a.B(0, 0));
}

TEST_CASE("heat3d diagonal, symmetry, analytic spectrum") {
    LyapunovProblem p = gen_heat3d(2, 1, 3);
    const double h = 1.0 / 3.0;
    for (int i = 0; i < p.dim(); ++i) {
        double d = 0.0;
        for (int q = p.A.row_ptr[i]; q < p.A.row_ptr[i + 1]; ++q)
            if (p.A.col_idx[q] == i) d = p.A.values[q];
        CHECK(d == doctest::Approx(-6.0 / (h * h)));
    }
    CHECK(is_symmetric(p.A));
    CHECK(p.symmetric);

    // grid_n = 4: eigenvalues are -(4/h^2) (sin^2 + sin^2 + sin^2)
    LyapunovProblem q4 = gen_heat3d(4, 1, 3);
    const int g = 4, n = q4.dim();
    const double h4 = 1.0 / (g + 1);
    std::vector<double> expect;
    for (int a = 1; a <= g; ++a)
        for (int b = 1; b <= g; ++b)
            for (int c = 1; c <= g; ++c)
                expect.push_back(-(4.0 / (h4 * h4)) * (std::pow(std::sin(a * std::numbers::pi * h4 / 2), 2) +
                                                       std::pow(std::sin(b * std::numbers::pi * h4 / 2), 2) +
                                                       std::pow(std::sin(c * std::numbers::pi * h4 / 2), 2)));
    std::sort(expect.begin(), expect.end());
    auto ev = sym_eig_jacobi(to_dense(q4.A));
    REQUIRE(static_cast<int>(ev.size()) == n);
    for (int i = 0; i < n; ++i) CHECK(ev[static_cast<size_t>(i)] == doctest::Approx(expect[static_cast<size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("msd dimensions, asymmetry, and pencil stability") {
    LyapunovProblem p = gen_msd(4, 1);
    CHECK(p.dim() == 26);  // 2*(3*4+1)
    CHECK(p.B.cols() == 2);
    CHECK_FALSE(is_symmetric(p.A));
    CHECK(is_symmetric(p.M));
    // M is diagonal after the shuffle
    for (int i = 0; i < p.M.n_rows; ++i)
        for (int q = p.M.row_ptr[i]; q < p.M.row_ptr[i + 1]; ++q) CHECK(p.M.col_idx[q] == i);

    LyapunovProblem p10 = gen_msd(10, 2);
    const int n = p10.dim();
    DenseReal Ad = to_dense(p10.A);
    DenseReal Md = to_dense(p10.M);
    // M^{-1} A for the diagonal mass matrix
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Ad(i, j) /= Md(i, i);
    auto ev = eigenvalues(Ad);
    for (const cplx& e : ev) CHECK(e.real() < 0.0);
}

TEST_CASE("matrix market problem round trip") {
    LyapunovProblem p = gen_cd2d(5, 2, 9);
    write_matrix_market("t_prob_A.mtx", p.A);
    write_matrix_market("t_prob_M.mtx", p.M);
    write_matrix_market_dense("t_prob_B.mtx", p.B);
    LyapunovProblem q = load_matrix_market("t_prob_A.mtx", std::optional<std::string>("t_prob_M.mtx"), "t_prob_B.mtx");
    CHECK(q.A.row_ptr == p.A.row_ptr);
    CHECK(q.A.col_idx == p.A.col_idx);
    CHECK(q.A.values == p.A.values);
    for (int j = 0; j < p.B.cols(); ++j)
        for (int i = 0; i < p.B.rows(); ++i) CHECK(q.B(i, j) == p.B(i, j));
    // M absent defaults to identity
    LyapunovProblem r = load_matrix_market("t_prob_A.mtx", std::nullopt, "t_prob_B.mtx");
    CHECK(r.M.nnz() == r.dim());
    // wrong B row count is a dimension error
    DenseReal small(3, 1);
    write_matrix_market_dense("t_prob_Bbad.mtx", small);
    CHECK_THROWS_AS(load_matrix_market("t_prob_A.mtx", std::nullopt, "t_prob_Bbad.mtx"), std::runtime_error);
    for (const char* f : {"t_prob_A.mtx", "t_prob_M.mtx", "t_prob_B.mtx", "t_prob_Bbad.mtx"})
        std::filesystem::remove(f);
}
