#include <doctest.h>

#include "lyap/rksm.hpp"
#include "lyap/verify.hpp"

using namespace lyap;

TEST_CASE("dense residual oracle on exact and empty factors") {
    // exact dense solution: residual vanishes
    LyapunovProblem p;
    const int n = 6;
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, -(1.0 + i));
    p.A = SparseMatrix::from_triplets(n, n, t);
    p.M = SparseMatrix::identity(n);
    p.B = DenseReal(n, 1);
    for (int i = 0; i < n; ++i) p.B(i, 0) = 1.0 + 0.3 * i;
    DenseReal W(n, n);
    blas::gemm_nn(1.0, p.B, conj_transpose(p.B), 0.0, W);
    DenseReal X = lyap_dense_real(to_dense(p.A), W);
    // factor X = Z Y Z^* with Z = I
    LowRankFactor fac;
    fac.f = FactorT<double>{DenseReal::identity(n), X};
    const double b2 = std::pow(spectral_norm_small(p.B), 2);
    CHECK(true_residual_norm_dense(p, fac) <= 1e-10 * b2);

    // zero factor: the residual is the right-hand side product
    LowRankFactor zero;
    zero.f = FactorT<double>{DenseReal(n, 1), std::nullopt};
    CHECK(true_residual_norm_dense(p, zero) == doctest::Approx(b2).epsilon(1e-10));
}

TEST_CASE("lanczos residual oracle: rank one, dense agreement, basis invariance") {
    LyapunovProblem p = gen_cd2d(10, 1, 77);  // n = 100
    const int n = p.dim();
    // rank-one residual w w^T realized by A = -I/2-ish trick: easier direct:
    // compare the two oracles on a genuine low-rank approximant
    RksmOptions o;
    o.inner.kind = InnerKind::Direct;
    o.eps_hat = 1e-4;
    RksmResult res = rksm_solve(p, o);
    const double dn = true_residual_norm_dense(p, res.X);
    const LanczosNorm ln = true_residual_norm_lanczos(p, res.X);
    CHECK(ln.converged);
    CHECK(std::abs(dn - ln.value) <= 1e-8 * std::max(dn, 1e-300));

    // invariance under an orthogonal refactoring Z -> Z U
    const auto& fac = std::get<FactorT<double>>(res.X.f);
    if (!fac.Y) return;
    // X = Q Y Q^*: refactor with a random rotation of the basis
    const int k = fac.Z.cols();
    CounterRng rng(4);
    DenseReal G(k, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) G(i, j) = rng.gaussian();
    DenseReal U = orthonormal_span(G);
    REQUIRE(U.cols() == k);
    DenseReal ZU = blas::matmul(fac.Z, U);
    DenseReal YU(k, k);
    {
        DenseReal T1 = blas::matmul_ch(U, *fac.Y);
        blas::gemm_nn(1.0, T1, U, 0.0, YU);
    }
    LowRankFactor rot;
    rot.f = FactorT<double>{ZU, YU};
    const LanczosNorm ln2 = true_residual_norm_lanczos(p, rot);
    CHECK(std::abs(ln2.value - ln.value) <= 1e-7 * std::max(ln.value, 1e-300));
    (void)n;
}

TEST_CASE("null-row oracle on a hand-built 2x3 case") {
    // H = [[2, 1], [1, 3], [0, 0.5]] (3x2): omega and the last inverse row
    DenseReal H(3, 2);
    H(0, 0) = 2.0;
    H(0, 1) = 1.0;
    H(1, 0) = 1.0;
    H(1, 1) = 3.0;
    H(2, 1) = 0.5;
    NullVectorOracle o = NullVectorOracle::build(H);
    // omega H = 0
    for (int c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += o.omega[static_cast<size_t>(i)] * H(i, c);
        CHECK(std::abs(acc) <= 1e-14);
    }
    // inverse rows: H2 = [[2,1],[1,3]], inv = [[3,-1],[-1,2]]/5
    CHECK(o.Hinv(0, 0) == doctest::Approx(0.6));
    CHECK(o.Hinv(0, 1) == doctest::Approx(-0.2));
    CHECK(o.Hinv(1, 0) == doctest::Approx(-0.2));
    CHECK(o.Hinv(1, 1) == doctest::Approx(0.4));
    CheckReport rep = lemma5_check(H);
    INFO(rep.to_text());
    CHECK(rep.all_pass());
}

TEST_CASE("inverse-row formulas match dense inversion over random trials") {
    CounterRng rng(6021);
    int done = 0;
    double worst = 0.0;
    for (int trial = 0; done < 100 && trial < 400; ++trial) {
        const int j = 12;
        DenseReal H(j + 1, j);
        for (int c = 0; c < j; ++c)
            for (int i = 0; i <= std::min(c + 1, j); ++i) H(i, c) = rng.gaussian();
        for (int i = 1; i <= j; ++i) H(i, i - 1) = (H(i, i - 1) >= 0 ? 0.5 : -0.5) + H(i, i - 1);
        CheckReport rep = lemma5_check(H);
        if (rep.items.size() == 1 && rep.items[0].name == "cond_guard_skip") continue;
        ++done;
        for (const auto& item : rep.items) {
            CHECK(item.pass);
            worst = std::max(worst, item.measured);
        }
    }
    CHECK(done == 100);
    CHECK(worst <= 1e-9);
}

TEST_CASE("nearly diagonal augmented matrices give canonical inverse rows") {
    const int j = 5;
    DenseReal H(j + 1, j);
    for (int i = 0; i < j; ++i) H(i, i) = 1.0;
    for (int i = 1; i <= j; ++i) H(i, i - 1) += 1e-7;  // keep it unreduced
    NullVectorOracle o = NullVectorOracle::build(H);
    for (int k = 1; k <= j; ++k)
        for (int i = 0; i < j; ++i)
            CHECK(o.Hinv(k - 1, i) == doctest::Approx(i == k - 1 ? 1.0 : 0.0).epsilon(1e-5));
}

TEST_CASE("decay bound constant for the trivially damped problem") {
    LyapunovProblem p;
    const int n = 5;
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, -1.0);
    p.A = SparseMatrix::from_triplets(n, n, t);
    p.M = SparseMatrix::identity(n);
    p.B = DenseReal(n, 1);
    for (int i = 0; i < n; ++i) p.B(i, 0) = 1.0;
    RksmOptions o;
    o.inner.kind = InnerKind::Direct;
    o.record_history = true;
    o.shifts = ShiftSource::list({cplx(1.0, 0.0)});
    RksmResult res = rksm_solve(p, o);
    const auto& run = std::get<RksmRun<double>>(res.run);
    DecayBoundReport rep = decay_bounds_check(p, run);
    CHECK(rep.alpha_A == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.c_A == doctest::Approx(0.5 * std::pow(1.0 + std::sqrt(2.0), 2)).epsilon(1e-6));
    CHECK(rep.violations == 0);
}

TEST_CASE("decay bounds hold with margin on a convection-diffusion run") {
    LyapunovProblem p = gen_cd2d(15, 1, 0);  // n = 225
    RksmOptions o;
    o.inner.kind = InnerKind::Direct;
    o.record_history = true;
    o.eps_hat = 1e-8;
    std::vector<cplx> shifts;
    for (int i = 0; i < 40; ++i) shifts.emplace_back(30.0 * std::pow(1.35, i % 14), 0.0);
    o.shifts = ShiftSource::list(shifts);
    RksmResult res = rksm_solve(p, o);
    REQUIRE(res.steps >= 8);
    const auto& run = std::get<RksmRun<double>>(res.run);
    DecayBoundReport rep = decay_bounds_check(p, run);
    INFO(rep.detail.to_text());
    CHECK(rep.checks > 100);
    CHECK(rep.violations == 0);
    CHECK(rep.min_overestimation >= 1.0);
}

TEST_CASE("a-posteriori guaranteed tolerances bound the gap") {
    LyapunovProblem p = gen_cd2d(12, 1, 5);  // n = 144
    RksmOptions o;
    o.inner.kind = InnerKind::Direct;
    o.inner.forced_residual = 1e-9;
    o.record_history = true;
    o.eps_hat = 1e-8;
    std::vector<cplx> shifts;
    for (int i = 0; i < 30; ++i) shifts.emplace_back(25.0 * std::pow(1.4, i % 12), 0.0);
    o.shifts = ShiftSource::list(shifts);
    RksmResult res = rksm_solve(p, o);
    const auto& run = std::get<RksmRun<double>>(res.run);
    // tau is linear in eps: the smallest budget accepted by the recorded
    // residual norms must itself bound the dense gap
    TheoTauReport unit = rksm_theo_tau_check(p, run, 1.0);
    double eps_star = 0.0;
    for (int k = 0; k < run.steps; ++k)
        eps_star = std::max(eps_star, run.s_norms[static_cast<size_t>(k)] / unit.tau[static_cast<size_t>(k)]);
    REQUIRE(eps_star > 0.0);
    TheoTauReport rep = rksm_theo_tau_check(p, run, eps_star * (1.0 + 1e-10));
    CHECK(rep.all_satisfied);
    CHECK(rep.gap_dense <= eps_star * (1.0 + 1e-10));
}

TEST_CASE("check reports serialize") {
    CheckReport rep;
    rep.add("alpha", 1.0, 2.0);
    rep.add("beta", 3.0, 2.0);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.failures() == 1);
    rep.write_csv("t_report.csv");
    SparseMatrix dummy;  // silence unused warnings in some toolchains
    (void)dummy;
    std::string text = rep.to_text();
    CHECK(text.find("[FAIL] beta") != std::string::npos);
    std::remove("t_report.csv");
}
