#include <doctest.h>

#include "lyap/eig.hpp"
#include "lyap/inner.hpp"
#include "lyap/krylov.hpp"
#include "lyap/precond.hpp"
#include "lyap/problems.hpp"
#include "lyap/rng.hpp"

using namespace lyap;

namespace {

SparseMatrix laplace2d(int g) {
    std::vector<std::tuple<int, int, double>> t;
    auto idx = [g](int x, int y) { return y * g + x; };
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) {
            t.emplace_back(idx(x, y), idx(x, y), 4.0);
            if (x > 0) t.emplace_back(idx(x, y), idx(x - 1, y), -1.0);
            if (x + 1 < g) t.emplace_back(idx(x, y), idx(x + 1, y), -1.0);
            if (y > 0) t.emplace_back(idx(x, y), idx(x, y - 1), -1.0);
            if (y + 1 < g) t.emplace_back(idx(x, y), idx(x, y + 1), -1.0);
        }
    return SparseMatrix::from_triplets(g * g, g * g, t);
}

}  // namespace

TEST_CASE("ic0 of a diagonal matrix is the square-root diagonal") {
    SparseMatrix D = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {1, 1, 9.0}});
    Preconditioner P = build_preconditioner(D, PrecondKind::IC0);
    CHECK(P.L.values[P.L.row_ptr[1] - 1] == doctest::Approx(2.0));
    CHECK(P.L.values[P.L.row_ptr[2] - 1] == doctest::Approx(3.0));
}

TEST_CASE("ilu0 of a tridiagonal matrix is exact") {
    const int n = 10;
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0 + 0.1 * i);
        if (i > 0) t.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) t.emplace_back(i, i + 1, -0.8);
    }
    SparseMatrix A = SparseMatrix::from_triplets(n, n, t);
    Preconditioner P = build_preconditioner(A, PrecondKind::ILU0);
    // applying the factorization inverts A to machine precision (no fill)
    CounterRng rng(2);
    std::vector<double> b(n), x(n), ax(n);
    for (auto& v : b) v = rng.gaussian();
    x = b;
    P.apply(std::span<double>(x));
    blas::spmv<double>(A, x, ax);
    for (int i = 0; i < n; ++i) CHECK(ax[static_cast<size_t>(i)] == doctest::Approx(b[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("ic on a nonsymmetric matrix is rejected, zero pivots are named") {
    SparseMatrix N = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(build_preconditioner(N, PrecondKind::IC0), std::invalid_argument);
    SparseMatrix Z = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 0.0}});
    CHECK_THROWS_WITH_AS(build_preconditioner(Z, PrecondKind::ILU0), doctest::Contains("row 1"), std::runtime_error);
    SparseMatrix Neg = SparseMatrix::from_triplets(1, 1, {{0, 0, -1.0}});
    CHECK_THROWS_WITH_AS(build_preconditioner(Neg, PrecondKind::IC0), doctest::Contains("row 0"), std::runtime_error);
}

TEST_CASE("ilut halves bicgstab iterations on a 2d laplacian") {
    SparseMatrix A = laplace2d(10);  // 100 x 100
    const int n = A.n_rows;
    auto op = [&](std::span<const double> x, std::span<double> y) { blas::spmv<double>(A, x, y); };
    Preconditioner P = build_preconditioner(A, PrecondKind::ILUT, 1e-3);
    auto pc_ilut = [&](std::span<double> x) { P.apply(x); };
    auto pc_none = [](std::span<double>) {};
    CounterRng rng(5);
    long with = 0, without = 0;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> b(n), x(n);
        for (auto& v : b) v = rng.gaussian();
        auto r1 = bicgstab<double>(n, op, std::span<const double>(b), pc_ilut, std::span<double>(x), 1e-10, 1000);
        CHECK(r1.converged);
        with += r1.iterations;
        auto r2 = bicgstab<double>(n, op, std::span<const double>(b), pc_none, std::span<double>(x), 1e-10, 1000);
        CHECK(r2.converged);
        without += r2.iterations;
    }
    CHECK(without >= 2 * with);
}

TEST_CASE("bicgstab identity and diagonal systems") {
    const int n = 16;
    auto id = [&](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i) y[i] = x[i];
    };
    auto pc = [](std::span<double>) {};
    CounterRng rng(6);
    std::vector<double> b(n), x(n);
    for (auto& v : b) v = rng.gaussian();
    auto rep = bicgstab<double>(n, id, std::span<const double>(b), pc, std::span<double>(x), 1e-12, 50);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);
    for (int i = 0; i < n; ++i) CHECK(x[static_cast<size_t>(i)] == doctest::Approx(b[static_cast<size_t>(i)]));

    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = 1.0 + i;
    auto dop = [&](std::span<const double> xx, std::span<double> yy) {
        for (int i = 0; i < n; ++i) yy[i] = d[static_cast<size_t>(i)] * xx[i];
    };
    auto rep2 = bicgstab<double>(n, dop, std::span<const double>(b), pc, std::span<double>(x), 1e-11, 200);
    CHECK(rep2.converged);
    CHECK(rep2.final_residual_norm <= 1e-11);
    for (int i = 0; i < n; ++i)
        CHECK(x[static_cast<size_t>(i)] == doctest::Approx(b[static_cast<size_t>(i)] / d[static_cast<size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("bicgstab on a shifted operator matches a dense solve") {
    LyapunovProblem p = gen_cd2d(7, 1, 11);  // n = 49
    const int n = p.dim();
    const double xi = 30.0;
    ShiftedSolver<double> direct(p.A, p.M, nullptr, false, InnerConfig{InnerKind::Direct, PrecondKind::None, 0, 2000, 2000, 0.0});
    InnerConfig icfg;
    icfg.kind = InnerKind::BiCGstab;
    icfg.precond = PrecondKind::ILUT;
    icfg.droptol = 1e-3;
    ShiftedSolver<double> iter(p.A, p.M, nullptr, false, icfg);
    DenseReal rhs(n, 1);
    CounterRng rng(8);
    for (int i = 0; i < n; ++i) rhs(i, 0) = rng.gaussian();
    const double tau = 1e-9;
    auto sd = direct.solve(-xi, rhs, tau);
    auto si = iter.solve(-xi, rhs, tau);
    CHECK(si.converged);
    CHECK(si.s_norm <= tau);
    // error bounded through the smallest singular value of the shifted matrix
    DenseReal K = to_dense(p.A);
    for (int i = 0; i < n; ++i) K(i, i) -= xi;
    DenseReal G(n, n);
    blas::gemm_ch(1.0, K, K, 0.0, G);
    auto ev = sym_eig_jacobi(G);
    const double smin = std::sqrt(std::max(ev.front(), 0.0));
    double err = 0.0;
    for (int i = 0; i < n; ++i) err += std::pow(si.W(i, 0) - sd.W(i, 0), 2);
    err = std::sqrt(err);
    CHECK(err <= 10.0 * tau / smin);
}

TEST_CASE("minres identity, tridiagonal system, and residual monotonicity") {
    const int n = 24;
    auto id = [&](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i) y[i] = x[i];
    };
    auto pc = [](std::span<double>) {};
    CounterRng rng(12);
    std::vector<double> b(n), x(n);
    for (auto& v : b) v = rng.gaussian();
    auto rep = minres(n, id, std::span<const double>(b), pc, std::span<double>(x), 1e-12, 50);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);

    // tridiag(-1,2,-1) + I, right-hand side e_1
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 3.0);
        if (i > 0) t.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
    }
    SparseMatrix A = SparseMatrix::from_triplets(n, n, t);
    auto op = [&](std::span<const double> xx, std::span<double> yy) { blas::spmv<double>(A, xx, yy); };
    std::fill(b.begin(), b.end(), 0.0);
    b[0] = 1.0;
    std::vector<double> hist;
    auto rep2 = minres(n, op, std::span<const double>(b), pc, std::span<double>(x), 1e-11, 200, &hist);
    CHECK(rep2.converged);
    DenseReal Ad = to_dense(A);
    DenseLU<double> lu;
    lu.factor(Ad);
    std::vector<double> ref = b;
    lu.solve_in_place(std::span<double>(ref));
    for (int i = 0; i < n; ++i) CHECK(std::abs(x[static_cast<size_t>(i)] - ref[static_cast<size_t>(i)]) <= 1e-9);
    // unpreconditioned recurrence norms never increase
    for (size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1] + 1e-10);
}

TEST_CASE("minres with incomplete cholesky on a negated heat operator") {
    LyapunovProblem p = gen_heat3d(6, 1, 4);  // n = 216, A symmetric negative definite
    InnerConfig cfg;
    cfg.kind = InnerKind::Minres;
    cfg.precond = PrecondKind::ICT;
    cfg.droptol = 1e-2;
    ShiftedSolver<double> s(p.A, p.M, nullptr, false, cfg);
    const int n = p.dim();
    DenseReal rhs(n, 1);
    CounterRng rng(3);
    for (int i = 0; i < n; ++i) rhs(i, 0) = rng.gaussian();
    auto res = s.solve(-5.0, rhs, 1e-9);  // A - 5 M, negative definite
    CHECK(res.converged);
    CHECK(res.s_norm <= 1e-9);
}

TEST_CASE("direct solver injects a residual of the requested size") {
    LyapunovProblem p = gen_cd2d(6, 2, 13);
    InnerConfig cfg;
    cfg.kind = InnerKind::Direct;
    cfg.forced_residual = 1e-6;
    ShiftedSolver<double> s(p.A, p.M, nullptr, false, cfg);
    DenseReal rhs(p.dim(), 2);
    CounterRng rng(4);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < p.dim(); ++i) rhs(i, j) = rng.gaussian();
    auto res = s.solve(-12.0, rhs, 0.0, 77);
    CHECK(res.s_norm == doctest::Approx(1e-6).epsilon(1e-8));
}
