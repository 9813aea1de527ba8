#pragma once

#include <string>
#include <vector>

#include "lyap/adi.hpp"
#include "lyap/factor.hpp"
#include "lyap/rksm.hpp"

namespace lyap {

// Machine-readable outcome of one verification item. `measured` must stay
// below `bound` (with the item's own meaning) for `pass`.
struct CheckItem {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct CheckReport {
    std::vector<CheckItem> items;
    bool all_pass() const {
        for (const auto& i : items)
            if (!i.pass) return false;
        return true;
    }
    int failures() const {
        int f = 0;
        for (const auto& i : items)
            if (!i.pass) ++f;
        return f;
    }
    void add(const std::string& name, double measured, double bound) {
        items.push_back({name, measured, bound, measured <= bound});
    }
    void write_csv(const std::string& path) const;
    std::string to_text() const;
    void merge(const CheckReport& other) {
        items.insert(items.end(), other.items.begin(), other.items.end());
    }
};

// ---- residual oracles (original generalized equation) --------------------

// assembles the residual densely and reports its extreme eigenvalue size
double true_residual_norm_dense(const LyapunovProblem& prob, const LowRankFactor& X, int dense_limit = 2000);

struct LanczosNorm {
    double value = 0.0;
    bool converged = false;
};
// matrix-free variant working on the factored residual operator
LanczosNorm true_residual_norm_lanczos(const LyapunovProblem& prob, const LowRankFactor& X, int steps = 80,
                                       double rel_tol = 1e-6);

// ---- projection-method (standard-form) oracles ----------------------------

// dense true residual of the reduced standard equation for the leading k
// blocks of a run (k = run.steps when k < 0)
template <class S>
double rksm_true_residual_dense(const LyapunovProblem& prob, const RksmRun<S>& run, const DenseMatrix<S>& Y, int k);

template <class S>
double rksm_true_residual_dense(const LyapunovProblem& prob, const RksmRun<S>& run) {
    return rksm_true_residual_dense(prob, run, run.Y, run.steps);
}

// dense residual-gap norm ||(I - QQ^*) S H^{-1} Y|| for the full run
template <class S>
double rksm_gap_norm_dense(const RksmRun<S>& run);

// all decomposition / projection / residual / gap identities of one run
template <class S>
CheckReport rksm_identity_checks(const LyapunovProblem& prob, const RksmRun<S>& run);

// ---- Hessenberg null-row oracle -------------------------------------------

// Dense reference data for the inverse-row recurrences of an unreduced
// augmented Hessenberg matrix.
struct NullVectorOracle {
    DenseReal H_under;            // (j+1) x j
    std::vector<double> omega;    // unit left null row, length j+1
    DenseReal Hinv;               // j x j dense inverse
    std::vector<double> phi;      // phi^{(k)}, k = 1..j (1-based index k-1)
    double cond = 0.0;

    static NullVectorOracle build(const DenseReal& H_under);
};

// relative errors of the three inverse-row formulas against dense inversion
CheckReport lemma5_check(const DenseReal& H_under, double cond_guard = 1e12);

// ---- decay bounds ----------------------------------------------------------

struct DecayBoundReport {
    double alpha_A = 0.0;  // half the magnitude of the extreme symmetric eigenvalue
    double c_A = 0.0;
    int violations = 0;
    int checks = 0;
    double min_overestimation = 0.0;  // bound/measured, should be >= 1
    CheckReport detail;
};

// r = 1 runs with recorded per-step solutions; requires the symmetric part
// of the (reduced) operator to be negative definite
DecayBoundReport decay_bounds_check(const LyapunovProblem& prob, const RksmRun<double>& run);

// ---- a-posteriori guaranteed tolerances for the projection method ---------

struct TheoTauReport {
    std::vector<double> tau;  // per solve
    bool all_satisfied = false;
    double gap_dense = 0.0;
    double eps = 0.0;
};

TheoTauReport rksm_theo_tau_check(const LyapunovProblem& prob, const RksmRun<double>& run, double eps);

// ---- low-rank iteration identities -----------------------------------------

// structure matrix, tail coupling block and scaling of Theorem-8 form
template <class S>
void adi_structure(const AdiRun<S>& run, int k, DenseMatrix<S>& T, DenseMatrix<S>& g, DenseMatrix<S>& Gamma);

template <class S>
double adi_gap_norm(const SparseMatrix& M, const AdiRun<S>& run, int k);  // ||S Gamma Z^* M^*|| at step k

template <class S>
CheckReport adi_identity_checks(const LyapunovProblem& prob, const AdiRun<S>& run, int dense_limit = 2000);

// dense norms of the step Cayley operators (A + a M)^{-1}-based; small n
std::vector<double> adi_cayley_norms(const LyapunovProblem& prob, const std::vector<cplx>& shifts,
                                     int dense_limit = 600);

// ---- template implementations ----------------------------------------------

namespace verify_detail {

// dense reduced operator Lm^{-1} A Lm^{-T}
inline DenseReal dense_reduced_A(const SparseMatrix& A, const MassFactor& lm) {
    DenseReal D = to_dense(A);
    const int n = D.rows();
    for (int j = 0; j < n; ++j) lm.solve_lower(D.col(j));
    DenseReal Dt(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) Dt(i, j) = D(j, i);
    for (int j = 0; j < n; ++j) lm.solve_lower(Dt.col(j));
    DenseReal out(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) out(i, j) = Dt(j, i);
    return out;
}

template <class S>
DenseMatrix<S> apply_real_dense(const DenseReal& A, const DenseMatrix<S>& X) {
    const int n = A.rows(), m = X.cols();
    DenseMatrix<S> Y(n, m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) {
            S acc{};
            for (int k = 0; k < n; ++k) acc += S(A(i, k)) * X(k, j);
            Y(i, j) = acc;
        }
    return Y;
}

// extreme |eigenvalue| of a Hermitian dense matrix
template <class S>
double hermitian_norm(const DenseMatrix<S>& R) {
    const int n = R.rows();
    auto op = [&](std::span<const S> x, std::span<S> y) {
        for (int i = 0; i < n; ++i) {
            S acc{};
            for (int k = 0; k < n; ++k) acc += R(i, k) * x[static_cast<size_t>(k)];
            y[static_cast<size_t>(i)] = acc;
        }
    };
    LanczosResult lr = lanczos_extreme<S>(n, op, std::min(n, 110), 1e-10);
    return std::max(std::abs(lr.lambda_min), std::abs(lr.lambda_max));
}

// sigma_max(U V^*) for tall factors through the small product (U^*U)(V^*V)
template <class S>
double lowrank_product_norm(const DenseMatrix<S>& U, const DenseMatrix<S>& V) {
    if (U.cols() == 0) return 0.0;
    DenseMatrix<S> Gu = blas::matmul_ch(U, U);
    DenseMatrix<S> Gv = blas::matmul_ch(V, V);
    DenseMatrix<S> P = blas::matmul(Gu, Gv);
    DenseCplx Pc(P.rows(), P.cols());
    for (int j = 0; j < P.cols(); ++j)
        for (int i = 0; i < P.rows(); ++i)
            Pc(i, j) = cplx(scalar_traits<S>::re(P(i, j)), scalar_traits<S>::im(P(i, j)));
    double lmax = 0.0;
    for (const cplx& e : eigenvalues(Pc)) lmax = std::max(lmax, e.real());
    return std::sqrt(std::max(0.0, lmax));
}

template <class S>
DenseMatrix<S> lu_solve_copy(const DenseMatrix<S>& A, const DenseMatrix<S>& B) {
    DenseLU<S> lu;
    lu.factor(A);
    return lu.solve(B);
}

}  // namespace verify_detail

template <class S>
double rksm_true_residual_dense(const LyapunovProblem& prob, const RksmRun<S>& run, const DenseMatrix<S>& Y, int k) {
    const int n = run.n, r = run.r;
    if (k < 0) k = run.steps;
    const int kr = k * r;
    if (n > 2000) throw std::invalid_argument("rksm_true_residual_dense: size guard at n <= 2000");
    MassFactor lm = MassFactor::build(prob.M);
    DenseReal Ahat = verify_detail::dense_reduced_A(prob.A, lm);
    DenseMatrix<S> Qk = run.Q.block(0, 0, n, kr);
    DenseMatrix<S> AQ = verify_detail::apply_real_dense(Ahat, Qk);
    DenseMatrix<S> T1 = blas::matmul(AQ, Y);
    DenseMatrix<S> BM = blas::matmul(run.Q.block(0, 0, n, r), run.beta);
    DenseMatrix<S> R(n, n);
    blas::gemm_nn(S{1}, T1, conj_transpose(Qk), S{0}, R);
    DenseMatrix<S> R2(n, n);
    blas::gemm_nn(S{1}, Qk, conj_transpose(T1), S{0}, R2);
    DenseMatrix<S> R3(n, n);
    blas::gemm_nn(S{1}, BM, conj_transpose(BM), S{0}, R3);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) R(i, j) += R2(i, j) + R3(i, j);
    return verify_detail::hermitian_norm(R);
}

// matrix-free variant of the reduced-equation residual norm, for sizes past
// the dense guard
template <class S>
LanczosNorm rksm_true_residual_lanczos(const LyapunovProblem& prob, const RksmRun<S>& run, int steps = 90,
                                       double rel_tol = 1e-6) {
    const int n = run.n, r = run.r, jr = run.steps * r;
    MassFactor lm = MassFactor::build(prob.M);
    DenseMatrix<S> Qj = run.Q.block(0, 0, n, jr);
    DenseMatrix<S> AQ(n, jr);
    for (int c = 0; c < jr; ++c) {
        std::vector<S> t(Qj.col(c).begin(), Qj.col(c).end());
        lm.solve_lower_trans(std::span<S>(t));
        blas::spmv<S>(prob.A, std::span<const S>(t.data(), t.size()), AQ.col(c));
        lm.solve_lower(AQ.col(c));
    }
    DenseMatrix<S> AQY = blas::matmul(AQ, run.Y);
    DenseMatrix<S> BM = blas::matmul(run.Q.block(0, 0, n, r), run.beta);
    auto op = [&](std::span<const S> x, std::span<S> y) {
        std::vector<S> t1(static_cast<size_t>(jr)), t2(static_cast<size_t>(jr));
        for (int c = 0; c < jr; ++c) t1[static_cast<size_t>(c)] = blas::dot<S>(Qj.col(c), x);
        for (int c = 0; c < jr; ++c) t2[static_cast<size_t>(c)] = blas::dot<S>(AQY.col(c), x);
        for (int i = 0; i < n; ++i) y[i] = S{};
        for (int c = 0; c < jr; ++c) {
            blas::axpy<S>(t1[static_cast<size_t>(c)], AQY.col(c), y);
            blas::axpy<S>(t2[static_cast<size_t>(c)], Qj.col(c), y);
        }
        for (int c = 0; c < r; ++c) {
            const S acc = blas::dot<S>(BM.col(c), x);
            blas::axpy<S>(acc, BM.col(c), y);
        }
    };
    LanczosResult lr = lanczos_extreme<S>(n, op, steps, rel_tol);
    return {std::max(std::abs(lr.lambda_min), std::abs(lr.lambda_max)), lr.converged};
}

template <class S>
double rksm_gap_norm_dense(const RksmRun<S>& run) {
    const int n = run.n, r = run.r, jr = run.steps * r;
    if (!run.history || run.S_hist.cols() != jr)
        throw std::invalid_argument("rksm_gap_norm_dense: run has no recorded linear residuals");
    DenseMatrix<S> Hj = run.H.block(0, 0, jr, jr);
    DenseMatrix<S> HinvY = verify_detail::lu_solve_copy(Hj, run.Y);
    DenseMatrix<S> W = blas::matmul(run.S_hist, HinvY);  // n x jr
    DenseMatrix<S> Qj = run.Q.block(0, 0, n, jr);
    DenseMatrix<S> C = blas::matmul_ch(Qj, W);
    DenseMatrix<S> QC = blas::matmul(Qj, C);
    for (int j = 0; j < jr; ++j)
        for (int i = 0; i < n; ++i) W(i, j) -= QC(i, j);
    return spectral_norm_small(W);
}

template <class S>
CheckReport rksm_identity_checks(const LyapunovProblem& prob, const RksmRun<S>& run) {
    using namespace verify_detail;
    CheckReport rep;
    const int n = run.n, r = run.r, j = run.steps, jr = j * r;
    if (jr == 0) return rep;
    MassFactor lm = MassFactor::build(prob.M);
    DenseReal Ahat = dense_reduced_A(prob.A, lm);
    const double normA = frob_norm(Ahat);
    DenseMatrix<S> Qfull = run.Q.block(0, 0, n, jr + r);
    DenseMatrix<S> Qj = run.Q.block(0, 0, n, jr);
    DenseMatrix<S> Hfull = run.H;  // (j+1)r x jr
    DenseMatrix<S> Hj = run.H.block(0, 0, jr, jr);
    const bool have_S = run.history && run.S_hist.cols() == jr;

    {  // basis orthonormality
        DenseMatrix<S> G = blas::matmul_ch(Qfull, Qfull);
        for (int i = 0; i < G.rows(); ++i) G(i, i) -= S{1};
        rep.add("basis_orthonormal", frob_norm(G), 1e-10 * (jr + r));
    }
    if (have_S) {  // augmented Hessenberg decomposition with residual term
        DenseMatrix<S> AQH = blas::matmul(apply_real_dense(Ahat, Qfull), Hfull);
        DenseMatrix<S> Mmat = Hfull;  // (j+1)r x jr -> [I;0] + H*D
        for (int col = 0; col < j; ++col) {
            const cplx xi = run.shifts[static_cast<size_t>(col)];
            const S xs = [&] {
                if constexpr (scalar_traits<S>::is_complex)
                    return S(xi);
                else
                    return S(xi.real());
            }();
            for (int c = 0; c < r; ++c)
                for (int i = 0; i < (j + 1) * r; ++i) Mmat(i, col * r + c) = Hfull(i, col * r + c) * xs;
        }
        for (int i = 0; i < jr; ++i) Mmat(i, i) += S{1};
        DenseMatrix<S> QM = blas::matmul(Qfull, Mmat);
        double err = 0.0;
        for (int c = 0; c < jr; ++c)
            for (int i = 0; i < n; ++i) {
                const S v = AQH(i, c) - QM(i, c) + run.S_hist(i, c);
                err += scalar_traits<S>::re(v) * scalar_traits<S>::re(v) +
                       scalar_traits<S>::im(v) * scalar_traits<S>::im(v);
            }
        rep.add("hessenberg_decomposition", std::sqrt(err), 1e-9 * normA * std::max(1.0, frob_norm(Hfull)));
    }
    DenseMatrix<S> gtilde(n, jr);
    if (have_S) {  // explicit-projection decomposition A Q = Q T + gtilde H^{-1}
        DenseMatrix<S> h_sub = Hfull.block(jr, (j - 1) * r, r, r);
        DenseMatrix<S> gh = blas::matmul(run.g, h_sub);
        gtilde.set_block(0, (j - 1) * r, gh);
        DenseMatrix<S> proj = blas::matmul(Qj, blas::matmul_ch(Qj, run.S_hist));
        for (int c = 0; c < jr; ++c)
            for (int i = 0; i < n; ++i) gtilde(i, c) -= run.S_hist(i, c) - proj(i, c);
        DenseMatrix<S> Texpl = run.Texpl.block(0, 0, jr, jr);
        DenseMatrix<S> AQ = apply_real_dense(Ahat, Qj);
        DenseMatrix<S> QT = blas::matmul(Qj, Texpl);
        DenseMatrix<S> gH = blas::matmul(gtilde, dense_inverse(Hj));
        double err = 0.0;
        for (int c = 0; c < jr; ++c)
            for (int i = 0; i < n; ++i) {
                const S v = AQ(i, c) - QT(i, c) - gH(i, c);
                err += scalar_traits<S>::re(v) * scalar_traits<S>::re(v) +
                       scalar_traits<S>::im(v) * scalar_traits<S>::im(v);
            }
        rep.add("explicit_decomposition", std::sqrt(err), 1e-9 * normA);

        // projection forms differ by the projected residual term
        DenseMatrix<S> QS = blas::matmul_ch(Qj, run.S_hist);
        DenseMatrix<S> corr = blas::matmul(QS, dense_inverse(Hj));
        DenseMatrix<S> D = Texpl - run.Timpl + corr;
        rep.add("projection_relation", frob_norm(D), 1e-9 * std::max(1.0, frob_norm(Texpl)));
    }
    {  // omega annihilates the augmented Hessenberg matrix, prefixes included
        DenseMatrix<S> wH = blas::matmul(run.omega, Hfull);
        rep.add("omega_null_row", frob_norm(wH), 1e-12 * std::max(1e-300, frob_norm(run.omega) * frob_norm(Hfull)));
        if (j >= 2) {
            const int m = j - 1, mr = m * r;
            DenseMatrix<S> wpre = run.omega.block(0, 0, r, mr + r);
            DenseMatrix<S> Hm = run.H.block(0, 0, mr + r, mr);
            DenseMatrix<S> wHm = blas::matmul(wpre, Hm);
            rep.add("omega_prefix", frob_norm(wHm), 1e-12 * std::max(1e-300, frob_norm(wpre) * frob_norm(Hm)));
        }
    }
    if (n <= 2000 && have_S) {  // residual identities against dense assembly
        const double scale = std::pow(spectral_norm_small(run.beta), 2);
        const double rtrue = rksm_true_residual_dense(prob, run, run.Y, j);
        DenseMatrix<S> HinvY = lu_solve_copy(Hj, run.Y);
        DenseMatrix<S> GW = blas::matmul(gtilde, HinvY);
        const double formula = spectral_norm_small(GW);
        rep.add("true_residual_identity", std::abs(rtrue - formula), 1e-8 * rtrue + 1e-13 * scale);

        // norm of the dense residual difference equals the gap norm
        {
            DenseMatrix<S> h_sub = Hfull.block(jr, (j - 1) * r, r, r);
            DenseMatrix<S> u = blas::matmul(run.g, h_sub);                      // n x r
            DenseMatrix<S> vrow = HinvY.block((j - 1) * r, 0, r, jr);           // r x jr
            DenseMatrix<S> vq(r, n);
            blas::gemm_nn(S{1}, vrow, conj_transpose(Qj), S{0}, vq);            // r x n
            // dense R_true
            DenseReal Ahat2 = Ahat;
            DenseMatrix<S> AQ = apply_real_dense(Ahat2, Qj);
            DenseMatrix<S> T1 = blas::matmul(AQ, run.Y);
            DenseMatrix<S> BM = blas::matmul(run.Q.block(0, 0, n, r), run.beta);
            DenseMatrix<S> D(n, n);
            blas::gemm_nn(S{1}, T1, conj_transpose(Qj), S{0}, D);
            DenseMatrix<S> D2(n, n);
            blas::gemm_nn(S{1}, Qj, conj_transpose(T1), S{0}, D2);
            DenseMatrix<S> D3(n, n);
            blas::gemm_nn(S{1}, BM, conj_transpose(BM), S{0}, D3);
            DenseMatrix<S> F(n, n);
            blas::gemm_nn(S{1}, u, vq, S{0}, F);
            for (int c = 0; c < n; ++c)
                for (int i = 0; i < n; ++i) D(i, c) += D2(i, c) + D3(i, c) - F(i, c) - conj_val(F(c, i));
            const double delta_norm = hermitian_norm(D);
            const double eta = rksm_gap_norm_dense(run);
            rep.add("gap_equals_residual_difference", std::abs(delta_norm - eta), 1e-9 * std::max(scale, rtrue) + 1e-13 * scale);
            rep.add("gap_bound_sound", eta, run.gap_bound_hist.back() * (1.0 + 1e-12) + 1e-14 * scale);
        }
    }
    return rep;
}

template <class S>
void adi_structure(const AdiRun<S>& run, int k, DenseMatrix<S>& T, DenseMatrix<S>& g, DenseMatrix<S>& Gamma) {
    const int r = run.r, kr = k * r;
    T = DenseMatrix<S>(kr, kr);
    g = DenseMatrix<S>(kr, r);
    Gamma = DenseMatrix<S>(kr, kr);
    for (int i = 0; i < k; ++i) {
        const cplx a = run.shifts[static_cast<size_t>(i)];
        const double gi = run.gammas[static_cast<size_t>(i)];
        for (int c = 0; c < r; ++c) {
            if constexpr (scalar_traits<S>::is_complex)
                T(i * r + c, i * r + c) = std::conj(a);
            else
                T(i * r + c, i * r + c) = S(a.real());
            g(i * r + c, c) = S(gi);
            Gamma(i * r + c, i * r + c) = S(gi);
        }
        for (int l = 0; l < i; ++l) {
            const double gl = run.gammas[static_cast<size_t>(l)];
            for (int c = 0; c < r; ++c) T(i * r + c, l * r + c) = S(-gl * gi);
        }
    }
}

template <class S>
double adi_gap_norm(const SparseMatrix& M, const AdiRun<S>& run, int k) {
    const int r = run.r, kr = k * r;
    if (!run.history || run.S_hist.cols() < kr)
        throw std::invalid_argument("adi_gap_norm: run has no recorded linear residuals");
    DenseMatrix<S> U = run.S_hist.block(0, 0, run.n, kr);
    for (int i = 0; i < k; ++i)
        for (int c = 0; c < r; ++c)
            for (int row = 0; row < run.n; ++row)
                U(row, i * r + c) *= S(run.gammas[static_cast<size_t>(i)]);
    DenseMatrix<S> Zk = run.Z.block(0, 0, run.n, kr);
    DenseMatrix<S> MZ = blas::spmv(M, Zk);
    return verify_detail::lowrank_product_norm(U, MZ);
}

template <class S>
CheckReport adi_identity_checks(const LyapunovProblem& prob, const AdiRun<S>& run, int dense_limit) {
    using namespace verify_detail;
    CheckReport rep;
    const int n = run.n, r = run.r, k = run.steps, kr = k * r;
    if (kr == 0) return rep;
    DenseMatrix<S> T, g, Gamma;
    adi_structure(run, k, T, g, Gamma);
    const bool have_S = run.history && run.S_hist.cols() == kr;

    {  // T + T^* + g g^* = 0 by construction of the structure matrix
        DenseMatrix<S> E = T + conj_transpose(T);
        DenseMatrix<S> gg(kr, kr);
        blas::gemm_nn(S{1}, g, conj_transpose(g), S{0}, gg);
        rep.add("structure_identity", frob_norm(E + gg), 1e-14 * std::max(1.0, frob_norm(T)));
    }
    if (have_S) {  // decomposition A Z = M Z T + w g^* - S Gamma
        DenseMatrix<S> AZ = blas::spmv(prob.A, run.Z);
        DenseMatrix<S> MZ = blas::spmv(prob.M, run.Z);
        DenseMatrix<S> MZT = blas::matmul(MZ, T);
        DenseMatrix<S> wg(n, kr);
        blas::gemm_nn(S{1}, run.w, conj_transpose(g), S{0}, wg);
        DenseMatrix<S> SG = blas::matmul(run.S_hist, Gamma);
        double err = 0.0, normA = 0.0;
        for (double v : prob.A.values) normA += v * v;
        normA = std::sqrt(normA);
        for (int c = 0; c < kr; ++c)
            for (int i = 0; i < n; ++i) {
                const S v = AZ(i, c) - MZT(i, c) - wg(i, c) + SG(i, c);
                err += scalar_traits<S>::re(v) * scalar_traits<S>::re(v) +
                       scalar_traits<S>::im(v) * scalar_traits<S>::im(v);
            }
        rep.add("lowrank_decomposition", std::sqrt(err), 1e-9 * normA * std::max(1.0, frob_norm(run.Z)));

        // gap accumulator soundness at every prefix
        for (int i = 1; i <= k; ++i) {
            const double eta = adi_gap_norm(prob.M, run, i);
            rep.add("gap_bound_step_" + std::to_string(i), eta,
                    run.u_hist[static_cast<size_t>(i)] * (1.0 + 1e-12) + 1e-300);
        }
    }
    if (have_S && n <= dense_limit) {  // residual identity against dense assembly
        DenseReal Ad = to_dense(prob.A), Md = to_dense(prob.M);
        DenseMatrix<S> Zc = run.Z;
        DenseMatrix<S> AZ = apply_real_dense(Ad, Zc), MZ = apply_real_dense(Md, Zc);
        DenseMatrix<S> X1(n, n), R(n, n);
        blas::gemm_nn(S{1}, AZ, conj_transpose(MZ), S{0}, X1);
        for (int j2 = 0; j2 < n; ++j2)
            for (int i = 0; i < n; ++i) R(i, j2) = X1(i, j2) + conj_val(X1(j2, i));
        DenseMatrix<S> B0(n, r);
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < n; ++i) B0(i, c) = S(prob.B(i, c));
        blas::gemm_nn(S{1}, B0, conj_transpose(B0), S{1}, R);
        // right-hand side from the factors
        DenseMatrix<S> SG = blas::matmul(run.S_hist, Gamma);
        DenseMatrix<S> F1(n, n);
        blas::gemm_nn(S{1}, SG, conj_transpose(MZ), S{0}, F1);
        DenseMatrix<S> ww(n, n);
        blas::gemm_nn(S{1}, run.w, conj_transpose(run.w), S{0}, ww);
        double err = 0.0, scale = frob_norm(R) + frob_norm(F1) + frob_norm(ww);
        for (int j2 = 0; j2 < n; ++j2)
            for (int i = 0; i < n; ++i) {
                const S v = R(i, j2) - (-F1(i, j2) - conj_val(F1(j2, i)) + ww(i, j2));
                err += scalar_traits<S>::re(v) * scalar_traits<S>::re(v) +
                       scalar_traits<S>::im(v) * scalar_traits<S>::im(v);
            }
        rep.add("residual_identity", std::sqrt(err), 1e-9 * std::max(1.0, scale));
    }
    if (have_S && n <= 600) {  // inexact factor recurrence with dense transfer operators
        DenseReal Ad = to_dense(prob.A), Md = to_dense(prob.M);
        DenseMatrix<S> wref(n, r);
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < n; ++i) wref(i, c) = S(prob.B(i, c));
        DenseMatrix<S> corr(n, r);
        for (int step = 0; step < k; ++step) {
            const cplx a = run.shifts[static_cast<size_t>(step)];
            DenseMatrix<S> K(n, n), Nmat(n, n);
            for (int j2 = 0; j2 < n; ++j2)
                for (int i = 0; i < n; ++i) {
                    S av;
                    if constexpr (scalar_traits<S>::is_complex)
                        av = S(a);
                    else
                        av = S(a.real());
                    K(i, j2) = S(Ad(i, j2)) + av * S(Md(i, j2));
                    if constexpr (scalar_traits<S>::is_complex)
                        Nmat(i, j2) = S(Ad(i, j2)) - std::conj(a) * S(Md(i, j2));
                    else
                        Nmat(i, j2) = S(Ad(i, j2)) - S(a.real()) * S(Md(i, j2));
                }
            DenseLU<S> lu;
            lu.factor(K);
            // apply the transfer operator to the running exact factor and the
            // accumulated correction
            auto cayley = [&](DenseMatrix<S>& X) {
                DenseMatrix<S> t = X;
                lu.solve_in_place(t);
                X = blas::matmul(Nmat, t);
            };
            cayley(wref);
            cayley(corr);
            // correction gains (C - I) s_step
            DenseMatrix<S> sblk = run.S_hist.block(0, step * r, n, r);
            DenseMatrix<S> cs = sblk;
            lu.solve_in_place(cs);
            cs = blas::matmul(Nmat, cs);
            for (int c = 0; c < r; ++c)
                for (int i = 0; i < n; ++i) corr(i, c) += cs(i, c) - sblk(i, c);
        }
        double err = 0.0;
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < n; ++i) {
                const S v = run.w(i, c) - (wref(i, c) - corr(i, c));
                err += scalar_traits<S>::re(v) * scalar_traits<S>::re(v) +
                       scalar_traits<S>::im(v) * scalar_traits<S>::im(v);
            }
        const double scale = frob_norm(wref) + frob_norm(corr) + frob_norm(run.w) + frob_norm(run.Z) + 1.0;
        rep.add("factor_recurrence", std::sqrt(err), 1e-9 * scale);
    }
    return rep;
}

}  // namespace lyap
