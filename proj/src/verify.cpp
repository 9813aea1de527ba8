#include "lyap/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lyap {

void CheckReport::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "name,measured,bound,pass\n");
    for (const auto& i : items) std::fprintf(f, "%s,%.17g,%.17g,%d\n", i.name.c_str(), i.measured, i.bound, i.pass ? 1 : 0);
    std::fclose(f);
}

std::string CheckReport::to_text() const {
    std::ostringstream os;
    for (const auto& i : items) {
        os << (i.pass ? "[ ok ] " : "[FAIL] ") << i.name << ": measured " << i.measured << " vs bound " << i.bound
           << "\n";
    }
    os << (all_pass() ? "all checks passed" : std::to_string(failures()) + " check(s) failed") << "\n";
    return os.str();
}

namespace {

template <class S>
double residual_norm_dense_impl(const LyapunovProblem& prob, const FactorT<S>& fac) {
    const int n = prob.dim();
    DenseMatrix<S> AZ = blas::spmv(prob.A, fac.Z);
    DenseMatrix<S> MZ = blas::spmv(prob.M, fac.Z);
    DenseMatrix<S> T1 = fac.Y ? blas::matmul(AZ, *fac.Y) : AZ;
    DenseMatrix<S> R(n, n);
    blas::gemm_nn(S{1}, T1, conj_transpose(MZ), S{0}, R);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            const S v = R(i, j) + conj_val(R(j, i));
            R(i, j) = v;
            R(j, i) = conj_val(v);
        }
    DenseMatrix<S> B0(n, prob.B.cols());
    for (int c = 0; c < prob.B.cols(); ++c)
        for (int i = 0; i < n; ++i) B0(i, c) = S(prob.B(i, c));
    blas::gemm_nn(S{1}, B0, conj_transpose(B0), S{1}, R);
    return verify_detail::hermitian_norm(R);
}

template <class S>
LanczosNorm residual_norm_lanczos_impl(const LyapunovProblem& prob, const FactorT<S>& fac, int steps, double rel_tol) {
    const int n = prob.dim();
    const SparseMatrix At = transpose(prob.A);
    const SparseMatrix Mt = transpose(prob.M);
    DenseMatrix<S> AZ = blas::spmv(prob.A, fac.Z);
    DenseMatrix<S> MZ = blas::spmv(prob.M, fac.Z);
    if (fac.Y) {
        AZ = blas::matmul(AZ, *fac.Y);  // carry the coefficient on the left factor
    }
    const int k = fac.Z.cols();
    auto op = [&](std::span<const S> x, std::span<S> y) {
        // y = AZ (MZ)^* x + MZ (AZ)^* x + B B^T x
        std::vector<S> t1(static_cast<size_t>(k)), t2(static_cast<size_t>(k));
        for (int c = 0; c < k; ++c) t1[static_cast<size_t>(c)] = blas::dot<S>(MZ.col(c), x);
        for (int c = 0; c < k; ++c) t2[static_cast<size_t>(c)] = blas::dot<S>(AZ.col(c), x);
        for (int i = 0; i < n; ++i) y[i] = S{};
        for (int c = 0; c < k; ++c) {
            blas::axpy<S>(t1[static_cast<size_t>(c)], AZ.col(c), y);
            blas::axpy<S>(t2[static_cast<size_t>(c)], MZ.col(c), y);
        }
        for (int c = 0; c < prob.B.cols(); ++c) {
            S acc{};
            for (int i = 0; i < n; ++i) acc += S(prob.B(i, c)) * x[i];
            for (int i = 0; i < n; ++i) y[i] += S(prob.B(i, c)) * acc;
        }
    };
    LanczosResult lr = lanczos_extreme<S>(n, op, steps, rel_tol);
    return {std::max(std::abs(lr.lambda_min), std::abs(lr.lambda_max)), lr.converged};
}

}  // namespace

double true_residual_norm_dense(const LyapunovProblem& prob, const LowRankFactor& X, int dense_limit) {
    if (prob.dim() > dense_limit)
        throw std::invalid_argument("true_residual_norm_dense: size guard at n <= " + std::to_string(dense_limit));
    return std::visit([&](const auto& fac) { return residual_norm_dense_impl(prob, fac); }, X.f);
}

LanczosNorm true_residual_norm_lanczos(const LyapunovProblem& prob, const LowRankFactor& X, int steps,
                                       double rel_tol) {
    return std::visit([&](const auto& fac) { return residual_norm_lanczos_impl(prob, fac, steps, rel_tol); }, X.f);
}

namespace {

// full Householder QR of a (j+1) x j matrix; the last column of Q spans the
// left null space
std::vector<double> left_null_row(const DenseReal& H) {
    const int m = H.rows(), n = H.cols();
    DenseReal R = H;
    DenseReal Q = DenseReal::identity(m);
    std::vector<double> v(static_cast<size_t>(m));
    for (int k = 0; k < n; ++k) {
        double nrm = 0.0;
        for (int i = k; i < m; ++i) nrm += R(i, k) * R(i, k);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) continue;
        const double alpha = R(k, k) >= 0 ? -nrm : nrm;
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) {
            v[static_cast<size_t>(i)] = R(i, k);
            if (i == k) v[static_cast<size_t>(i)] -= alpha;
            vnorm2 += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        for (int j = k; j < n; ++j) {
            double acc = 0.0;
            for (int i = k; i < m; ++i) acc += v[static_cast<size_t>(i)] * R(i, j);
            acc *= beta;
            for (int i = k; i < m; ++i) R(i, j) -= v[static_cast<size_t>(i)] * acc;
        }
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = k; i < m; ++i) acc += Q(j, i) * v[static_cast<size_t>(i)];
            acc *= beta;
            for (int i = k; i < m; ++i) Q(j, i) -= acc * v[static_cast<size_t>(i)];
        }
    }
    std::vector<double> w(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) w[static_cast<size_t>(i)] = Q(i, m - 1);
    return w;
}

double row_norm(const DenseReal& A, int row) {
    double acc = 0.0;
    for (int j = 0; j < A.cols(); ++j) acc += A(row, j) * A(row, j);
    return std::sqrt(acc);
}

}  // namespace

NullVectorOracle NullVectorOracle::build(const DenseReal& H_under) {
    const int j = H_under.cols();
    if (H_under.rows() != j + 1) throw std::invalid_argument("NullVectorOracle: expected a (j+1) x j matrix");
    NullVectorOracle o;
    o.H_under = H_under;
    o.omega = left_null_row(H_under);
    DenseReal Hj = H_under.block(0, 0, j, j);
    o.Hinv = dense_inverse(Hj);
    o.cond = spectral_norm_small(Hj) * spectral_norm_small(o.Hinv);
    o.phi.assign(static_cast<size_t>(j), 0.0);
    const double hj1 = H_under(j, j - 1);
    for (int k = 1; k <= j; ++k) {
        // v^{(k)} = omega_{1:j} + [0_k, [0_{j-k-1}, h_{j+1,j} omega_{j+1}] * inv(H_{k+1:j,k+1:j})]
        std::vector<double> v(static_cast<size_t>(j));
        for (int i = 0; i < j; ++i) v[static_cast<size_t>(i)] = o.omega[static_cast<size_t>(i)];
        const int t = j - k;  // trailing block size
        if (t > 0) {
            DenseReal Ht = H_under.block(k, k, t, t);
            DenseReal rhs(1, t);
            rhs(0, t - 1) = hj1 * o.omega[static_cast<size_t>(j)];
            // row vector times inverse: solve Ht^T x = rhs^T
            DenseReal Htt(t, t);
            for (int a = 0; a < t; ++a)
                for (int b = 0; b < t; ++b) Htt(a, b) = Ht(b, a);
            DenseLU<double> lu;
            lu.factor(std::move(Htt));
            std::vector<double> x(static_cast<size_t>(t));
            for (int a = 0; a < t; ++a) x[static_cast<size_t>(a)] = rhs(0, a);
            lu.solve_in_place(std::span<double>(x));
            for (int a = 0; a < t; ++a) v[static_cast<size_t>(k + a)] += x[static_cast<size_t>(a)];
        }
        double phi = 0.0;
        for (int i = 0; i < j; ++i) phi += v[static_cast<size_t>(i)] * Hj(i, k - 1);
        o.phi[static_cast<size_t>(k - 1)] = phi;
    }
    return o;
}

CheckReport lemma5_check(const DenseReal& H_under, double cond_guard) {
    CheckReport rep;
    const int j = H_under.cols();
    NullVectorOracle o = NullVectorOracle::build(H_under);
    if (o.cond > cond_guard) {
        rep.add("cond_guard_skip", 0.0, 1.0);
        return rep;
    }
    const double hj1 = H_under(j, j - 1);
    // (a) last row of the inverse from the null row
    {
        double err = 0.0, scale = 0.0;
        for (int i = 0; i < j; ++i) {
            const double formula = -o.omega[static_cast<size_t>(i)] / (o.omega[static_cast<size_t>(j)] * hj1);
            err = std::max(err, std::abs(formula - o.Hinv(j - 1, i)));
            scale = std::max(scale, std::abs(o.Hinv(j - 1, i)));
        }
        rep.add("last_row_formula", err, 1e-10 * std::max(scale, 1e-300));
    }
    // (b) every row via the trailing-block correction and its scaling
    {
        double worst = 0.0;
        for (int k = 1; k <= j; ++k) {
            std::vector<double> v(static_cast<size_t>(j));
            for (int i = 0; i < j; ++i) v[static_cast<size_t>(i)] = o.omega[static_cast<size_t>(i)];
            const int t = j - k;
            if (t > 0) {
                DenseReal Ht = H_under.block(k, k, t, t);
                DenseReal Htt(t, t);
                for (int a = 0; a < t; ++a)
                    for (int b = 0; b < t; ++b) Htt(a, b) = Ht(b, a);
                DenseLU<double> lu;
                lu.factor(std::move(Htt));
                std::vector<double> x(static_cast<size_t>(t), 0.0);
                x[static_cast<size_t>(t - 1)] = hj1 * o.omega[static_cast<size_t>(j)];
                lu.solve_in_place(std::span<double>(x));
                for (int a = 0; a < t; ++a) v[static_cast<size_t>(k + a)] += x[static_cast<size_t>(a)];
            }
            const double phi = o.phi[static_cast<size_t>(k - 1)];
            double err = 0.0, scale = 0.0;
            for (int i = 0; i < j; ++i) {
                const double formula = v[static_cast<size_t>(i)] / phi;
                err = std::max(err, std::abs(formula - o.Hinv(k - 1, i)));
                scale = std::max(scale, std::abs(o.Hinv(k - 1, i)));
            }
            worst = std::max(worst, err / std::max(scale, 1e-300));
        }
        rep.add("row_formula", worst, 1e-10);
    }
    // (c) leading entries of the null row follow the one-step recurrence
    {
        double worst = 0.0;
        for (int k = 2; k <= j; ++k) {
            DenseReal Hk1 = H_under.block(0, 0, k - 1, k - 1);
            DenseReal Hk1inv = dense_inverse(Hk1);
            const double hk = H_under(k - 1, k - 2);
            const double wk = o.omega[static_cast<size_t>(k - 1)];
            double err = 0.0, scale = 0.0;
            for (int i = 0; i < k - 1; ++i) {
                const double expect = -hk * Hk1inv(k - 2, i) * wk;
                err = std::max(err, std::abs(o.omega[static_cast<size_t>(i)] - expect));
                scale = std::max(scale, std::abs(o.omega[static_cast<size_t>(i)]));
            }
            worst = std::max(worst, err / std::max(scale, 1e-300));
        }
        rep.add("prefix_recurrence", worst, 1e-10);
    }
    return rep;
}

DecayBoundReport decay_bounds_check(const LyapunovProblem& prob, const RksmRun<double>& run) {
    DecayBoundReport out;
    if (run.r != 1) throw std::invalid_argument("decay_bounds_check: only rank-one right-hand sides");
    if (!run.history || run.Y_hist.empty())
        throw std::invalid_argument("decay_bounds_check: run must record per-step solutions");
    const int n = run.n, j = run.steps;
    MassFactor lm = MassFactor::build(prob.M);
    DenseReal Ahat = verify_detail::dense_reduced_A(prob.A, lm);
    // symmetric-part definiteness, the hypothesis of the decay bounds
    auto symop = [&](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += 0.5 * (Ahat(i, k) + Ahat(k, i)) * x[static_cast<size_t>(k)];
            y[static_cast<size_t>(i)] = acc;
        }
    };
    LanczosResult lr = lanczos_extreme<double>(n, symop, std::min(n, 100), 1e-8);
    if (lr.lambda_max >= 0.0) {
        out.detail.add("hypothesis_sym_negative_definite", lr.lambda_max, -1e-300);
        return out;
    }
    out.detail.add("hypothesis_sym_negative_definite", lr.lambda_max, 0.0);
    out.alpha_A = std::abs(lr.lambda_min);  // half of |lambda_min(A + A^T)|
    const double sqrt2 = std::sqrt(2.0);
    out.c_A = (1.0 + sqrt2) * (1.0 + sqrt2) / (2.0 * out.alpha_A);

    // per-step true residual norms from the dense oracle
    std::vector<double> rtrue(static_cast<size_t>(j) + 1, 0.0);
    rtrue[0] = std::pow(spectral_norm_small(run.beta), 2);
    for (int k = 1; k <= j; ++k)
        rtrue[static_cast<size_t>(k)] = rksm_true_residual_dense(prob, run, run.Y_hist[static_cast<size_t>(k - 1)], k);
    std::vector<double> prefix_min(static_cast<size_t>(j) + 1);
    prefix_min[0] = rtrue[0];
    for (int k = 1; k <= j; ++k) prefix_min[static_cast<size_t>(k)] = std::min(prefix_min[static_cast<size_t>(k - 1)], rtrue[static_cast<size_t>(k)]);

    const DenseReal& Yj = run.Y;
    double min_over = 1e300;
    // truncation differences against earlier solutions
    for (int k = 1; k < j; ++k) {
        DenseReal D = Yj;
        const DenseReal& Yk = run.Y_hist[static_cast<size_t>(k - 1)];
        for (int c = 0; c < k; ++c)
            for (int i = 0; i < k; ++i) D(i, c) -= Yk(i, c);
        const double measured = spectral_norm_small(D);
        const double bound = out.c_A * rtrue[static_cast<size_t>(k)];
        ++out.checks;
        if (measured > bound) ++out.violations;
        if (measured > 0) min_over = std::min(min_over, bound / measured);
    }
    // entrywise bounds with the best admissible prior residual
    for (int l = 0; l < j; ++l)
        for (int i = 0; i < j; ++i) {
            const int m = std::max(l, i);  // need k < max(l,i)+1 in one-based terms
            if (m == 0) continue;
            const double bound = out.c_A * prefix_min[static_cast<size_t>(m - 1 + 1) - 1];
            const double measured = std::abs(Yj(l, i));
            ++out.checks;
            if (measured > bound) ++out.violations;
            if (measured > 0) min_over = std::min(min_over, bound / measured);
        }
    // row bounds on H^{-1} Y through the null-row scaling constants
    {
        DenseReal Hu = run.H;  // (j+1) x j for r = 1
        NullVectorOracle o = NullVectorOracle::build(Hu);
        DenseReal HinvY = blas::matmul(o.Hinv, Yj);
        for (int l = 1; l <= j; ++l) {
            const double measured = row_norm(HinvY, l - 1);
            double bound;
            if (l == 1) {
                bound = out.c_A * row_norm(o.Hinv, 0) * rtrue[0];
            } else {
                const double phi = std::abs(o.phi[static_cast<size_t>(l - 1)]);
                const double gn = run.g_norm_hist[static_cast<size_t>(l - 2)];
                const double comp = run.res_comp_hist[static_cast<size_t>(l - 2)];
                bound = comp / (phi * gn) + out.c_A * row_norm(o.Hinv, l - 1) * rtrue[static_cast<size_t>(l - 1)];
            }
            ++out.checks;
            if (measured > bound) ++out.violations;
            if (measured > 0) min_over = std::min(min_over, bound / measured);
        }
    }
    out.min_overestimation = min_over;
    out.detail.add("decay_bound_violations", out.violations, 0.0);
    return out;
}

TheoTauReport rksm_theo_tau_check(const LyapunovProblem& prob, const RksmRun<double>& run, double eps) {
    if (run.r != 1) throw std::invalid_argument("rksm_theo_tau_check: only rank-one right-hand sides");
    if (!run.history) throw std::invalid_argument("rksm_theo_tau_check: run must record history");
    TheoTauReport out;
    out.eps = eps;
    const int n = run.n, j = run.steps;
    MassFactor lm = MassFactor::build(prob.M);
    DenseReal Ahat = verify_detail::dense_reduced_A(prob.A, lm);
    auto symop = [&](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += 0.5 * (Ahat(i, k) + Ahat(k, i)) * x[static_cast<size_t>(k)];
            y[static_cast<size_t>(i)] = acc;
        }
    };
    LanczosResult lr = lanczos_extreme<double>(n, symop, std::min(n, 100), 1e-8);
    if (lr.lambda_max >= 0.0) throw std::invalid_argument("rksm_theo_tau_check: symmetric part not negative definite");
    const double alpha_A = std::abs(lr.lambda_min);  // half of |lambda_min(A + A^T)|
    const double c_A = std::pow(1.0 + std::sqrt(2.0), 2) / (2.0 * alpha_A);

    std::vector<double> rtrue(static_cast<size_t>(j) + 1, 0.0);
    rtrue[0] = std::pow(spectral_norm_small(run.beta), 2);
    for (int k = 1; k < j; ++k)
        rtrue[static_cast<size_t>(k)] = rksm_true_residual_dense(prob, run, run.Y_hist[static_cast<size_t>(k - 1)], k);
    NullVectorOracle o = NullVectorOracle::build(run.H);
    out.tau.assign(static_cast<size_t>(j), 0.0);
    out.all_satisfied = true;
    for (int k = 1; k <= j; ++k) {
        double tau;
        if (k == 1) {
            tau = eps / (j * c_A * row_norm(o.Hinv, 0) * rtrue[0]);
        } else {
            const double phi = std::abs(o.phi[static_cast<size_t>(k - 1)]);
            const double gn = run.g_norm_hist[static_cast<size_t>(k - 2)];
            const double comp = run.res_comp_hist[static_cast<size_t>(k - 2)];
            const double denom = (static_cast<double>(j) / (phi * gn)) * comp +
                                 j * c_A * row_norm(o.Hinv, k - 1) * rtrue[static_cast<size_t>(k - 1)];
            tau = eps / denom;
        }
        out.tau[static_cast<size_t>(k - 1)] = tau;
        if (run.s_norms[static_cast<size_t>(k - 1)] > tau) out.all_satisfied = false;
    }
    out.gap_dense = rksm_gap_norm_dense(run);
    return out;
}

std::vector<double> adi_cayley_norms(const LyapunovProblem& prob, const std::vector<cplx>& shifts, int dense_limit) {
    const int n = prob.dim();
    if (n > dense_limit) throw std::invalid_argument("adi_cayley_norms: size guard");
    DenseReal Ad = to_dense(prob.A), Md = to_dense(prob.M);
    std::vector<double> out;
    for (const cplx& a : shifts) {
        DenseCplx K(n, n), Nmat(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                K(i, j) = cplx(Ad(i, j), 0.0) + a * Md(i, j);
                Nmat(i, j) = cplx(Ad(i, j), 0.0) - std::conj(a) * Md(i, j);
            }
        DenseLU<cplx> lu;
        lu.factor(std::move(K));
        DenseCplx Kinv = lu.solve(DenseCplx::identity(n));
        DenseCplx C = blas::matmul(Nmat, Kinv);
        out.push_back(spectral_norm_small(C));
    }
    return out;
}

}  // namespace lyap
