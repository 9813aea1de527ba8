#include <doctest.h>

#include <algorithm>
#include <complex>
#include <numbers>

#include "lyap/eig.hpp"
#include "lyap/rng.hpp"

using namespace lyap;

namespace {

DenseCplx random_cplx(int n, int m, CounterRng& rng) {
    DenseCplx A(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) A(i, j) = cplx(rng.gaussian(), rng.gaussian());
    return A;
}

DenseReal random_real(int n, int m, CounterRng& rng) {
    DenseReal A(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) A(i, j) = rng.gaussian();
    return A;
}

// random real orthogonal matrix from QR of a Gaussian matrix
DenseReal random_orthogonal(int n, CounterRng& rng) {
    DenseReal G = random_real(n, n, rng);
    // Gram-Schmidt
    for (int j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < j; ++i) {
                double c = 0.0;
                for (int k = 0; k < n; ++k) c += G(k, i) * G(k, j);
                for (int k = 0; k < n; ++k) G(k, j) -= c * G(k, i);
            }
        double nrm = 0.0;
        for (int k = 0; k < n; ++k) nrm += G(k, j) * G(k, j);
        nrm = std::sqrt(nrm);
        for (int k = 0; k < n; ++k) G(k, j) /= nrm;
    }
    return G;
}

// Durand-Kerner roots of a monic polynomial with the given coefficients
// c[0] + c[1] z + ... + c[deg-1] z^{deg-1} + z^deg, in long double
std::vector<cplx> durand_kerner(const std::vector<long double>& c_low) {
    using cld = std::complex<long double>;
    const int deg = static_cast<int>(c_low.size());
    auto eval = [&](cld z) {
        cld acc = 1.0L;
        for (int k = deg - 1; k >= 0; --k) acc = acc * z + cld(c_low[static_cast<size_t>(k)], 0.0L);
        return acc;
    };
    std::vector<cld> roots(static_cast<size_t>(deg));
    for (int i = 0; i < deg; ++i) {
        const long double ang = 2.0L * std::numbers::pi_v<long double> * i / deg + 0.4L;
        roots[static_cast<size_t>(i)] = cld(0.4L + 0.9L * std::cos(ang), 0.9L * std::sin(ang));
    }
    for (int sweep = 0; sweep < 500; ++sweep) {
        long double move = 0.0L;
        for (int i = 0; i < deg; ++i) {
            cld denom = 1.0L;
            for (int j = 0; j < deg; ++j)
                if (j != i) denom *= roots[static_cast<size_t>(i)] - roots[static_cast<size_t>(j)];
            const cld delta = eval(roots[static_cast<size_t>(i)]) / denom;
            roots[static_cast<size_t>(i)] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-17L) break;
    }
    std::vector<cplx> out(static_cast<size_t>(deg));
    for (int i = 0; i < deg; ++i)
        out[static_cast<size_t>(i)] = cplx(static_cast<double>(roots[static_cast<size_t>(i)].real()),
                                           static_cast<double>(roots[static_cast<size_t>(i)].imag()));
    return out;
}

double match_eigen_sets(std::vector<cplx> a, std::vector<cplx> b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (const cplx& x : a) {
        double bestd = 1e300;
        size_t besti = 0;
        for (size_t i = 0; i < b.size(); ++i) {
            const double d = std::abs(x - b[i]);
            if (d < bestd) {
                bestd = d;
                besti = i;
            }
        }
        worst = std::max(worst, bestd);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(besti));
    }
    return worst;
}

}  // namespace

TEST_CASE("hessenberg leaves small and diagonal matrices unchanged") {
    DenseCplx T(2, 2);
    T(0, 0) = cplx(1, 0);
    T(0, 1) = cplx(2, 0);
    T(1, 0) = cplx(3, 0);
    T(1, 1) = cplx(4, 0);
    DenseCplx V, H;
    hessenberg_reduce(T, V, H);
    CHECK(max_abs(H - T) == 0.0);
    CHECK(max_abs(V - DenseCplx::identity(2)) == 0.0);

    DenseCplx D(3, 3);
    D(0, 0) = cplx(1, 0);
    D(1, 1) = cplx(2, 0);
    D(2, 2) = cplx(3, 0);
    hessenberg_reduce(D, V, H);
    CHECK(max_abs(H - D) <= 1e-15);
}

TEST_CASE("hessenberg reconstruction on random 20x20") {
    CounterRng rng(21);
    DenseCplx T = random_cplx(20, 20, rng);
    DenseCplx V, H;
    hessenberg_reduce(T, V, H);
    // V H V^* = T
    DenseCplx VH = blas::matmul(V, H);
    DenseCplx R(20, 20);
    for (int j = 0; j < 20; ++j)
        for (int i = 0; i < 20; ++i) {
            cplx acc{};
            for (int k = 0; k < 20; ++k) acc += VH(i, k) * std::conj(V(j, k));
            R(i, j) = acc;
        }
    CHECK(frob_norm(R - T) <= 1e-13 * frob_norm(T));
    for (int j = 0; j < 20; ++j)
        for (int i = j + 2; i < 20; ++i) CHECK(H(i, j) == cplx{});
}

TEST_CASE("schur of a diagonal matrix and a rotation") {
    DenseCplx D(2, 2);
    D(0, 0) = cplx(-1, 0);
    D(1, 1) = cplx(-2, 0);
    SchurForm sf = schur(D);
    auto ev = sf.eigenvalues();
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    CHECK(std::abs(ev[0] - cplx(-2, 0)) <= 1e-14);
    CHECK(std::abs(ev[1] - cplx(-1, 0)) <= 1e-14);

    // [[0,1],[-1,0]] has eigenvalues +-i (roots of z^2+1)
    DenseCplx J(2, 2);
    J(0, 1) = cplx(1, 0);
    J(1, 0) = cplx(-1, 0);
    auto evj = schur(J).eigenvalues();
    std::sort(evj.begin(), evj.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
    CHECK(std::abs(evj[0] - cplx(0, -1)) <= 1e-14);
    CHECK(std::abs(evj[1] - cplx(0, 1)) <= 1e-14);
}

TEST_CASE("schur eigenvalues match an independent polynomial-root oracle") {
    // stable 25x25 matrix with spectrum on a circle in the left half plane,
    // hidden behind a random orthogonal similarity
    const int n = 25;
    const double c = -1.05, rho = 0.95;
    DenseReal C0(n, n);  // companion of z^n - rho^n, shifted by c
    for (int i = 1; i < n; ++i) C0(i, i - 1) = 1.0;
    C0(0, n - 1) = std::pow(rho, n);
    for (int i = 0; i < n; ++i) C0(i, i) += c;
    CounterRng rng(77);
    DenseReal Q = random_orthogonal(n, rng);
    DenseReal QA(n, n), A(n, n);
    blas::gemm_nn(1.0, Q, C0, 0.0, QA);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += QA(i, k) * Q(j, k);
            A(i, j) = acc;
        }

    // oracle: center by the trace mean, recover the characteristic
    // polynomial brute-force from traces of powers (Newton identities), and
    // root-find it; eigensolver-free
    const double shift = [&] {
        double t = 0.0;
        for (int i = 0; i < n; ++i) t += A(i, i);
        return t / n;
    }();
    DenseReal B = A;
    for (int i = 0; i < n; ++i) B(i, i) -= shift;
    std::vector<long double> ptrace(static_cast<size_t>(n) + 1, 0.0L);
    DenseReal Pk = B;
    for (int k = 1; k <= n; ++k) {
        long double tr = 0.0L;
        for (int i = 0; i < n; ++i) tr += Pk(i, i);
        ptrace[static_cast<size_t>(k)] = tr;
        if (k < n) {
            DenseReal next(n, n);
            blas::gemm_nn(1.0, Pk, B, 0.0, next);
            Pk = std::move(next);
        }
    }
    std::vector<long double> esym(static_cast<size_t>(n) + 1, 0.0L);
    esym[0] = 1.0L;
    for (int k = 1; k <= n; ++k) {
        long double acc = 0.0L;
        for (int i = 1; i <= k; ++i)
            acc += ((i % 2) ? 1.0L : -1.0L) * esym[static_cast<size_t>(k - i)] * ptrace[static_cast<size_t>(i)];
        esym[static_cast<size_t>(k)] = acc / k;
    }
    std::vector<long double> coeff(static_cast<size_t>(n));  // monic, low order first
    for (int k = 0; k < n; ++k) {
        const int e_index = n - k;
        coeff[static_cast<size_t>(k)] = ((e_index % 2) ? -1.0L : 1.0L) * esym[static_cast<size_t>(e_index)];
    }
    auto roots = durand_kerner(coeff);
    for (auto& z : roots) z += shift;
    auto ev = eigenvalues(A);
    CHECK(match_eigen_sets(ev, roots) <= 1e-8);
}

TEST_CASE("schur eigenvalues are invariant under similarity") {
    CounterRng rng(31);
    const int n = 15;
    DenseReal G = random_real(n, n, rng);
    for (int i = 0; i < n; ++i) G(i, i) -= 6.0;
    DenseReal P = random_orthogonal(n, rng);
    DenseReal PG(n, n), S(n, n);
    blas::gemm_nn(1.0, P, G, 0.0, PG);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += PG(i, k) * P(j, k);
            S(i, j) = acc;
        }
    auto e1 = eigenvalues(G);
    auto e2 = eigenvalues(S);
    CHECK(match_eigen_sets(e1, e2) <= 1e-8);
}

TEST_CASE("schur reconstruction and unitarity") {
    CounterRng rng(55);
    DenseCplx T = random_cplx(25, 25, rng);
    SchurForm sf = schur(T);
    DenseCplx US = blas::matmul(sf.U, sf.S);
    DenseCplx R(25, 25);
    for (int j = 0; j < 25; ++j)
        for (int i = 0; i < 25; ++i) {
            cplx acc{};
            for (int k = 0; k < 25; ++k) acc += US(i, k) * std::conj(sf.U(j, k));
            R(i, j) = acc;
        }
    CHECK(frob_norm(R - T) <= 1e-12 * frob_norm(T));
    DenseCplx G = blas::matmul_ch(sf.U, sf.U);
    for (int i = 0; i < 25; ++i) G(i, i) -= cplx(1, 0);
    CHECK(frob_norm(G) <= 1e-12);
}

TEST_CASE("lyap_dense closed forms") {
    // T = -I, W = I  =>  Y = I/2
    DenseCplx T = scaled(DenseCplx::identity(2), cplx(-1, 0));
    DenseCplx W = DenseCplx::identity(2);
    DenseCplx Y = lyap_dense(T, W);
    CHECK(std::abs(Y(0, 0) - cplx(0.5, 0)) <= 1e-14);
    CHECK(std::abs(Y(1, 1) - cplx(0.5, 0)) <= 1e-14);
    CHECK(std::abs(Y(0, 1)) <= 1e-14);

    // T = diag(-1,-2), W = ones => Y_ij = 1/(lam_i + lam_j)
    DenseCplx T2(2, 2);
    T2(0, 0) = cplx(-1, 0);
    T2(1, 1) = cplx(-2, 0);
    DenseCplx W2(2, 2);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) W2(i, j) = cplx(1, 0);
    DenseCplx Y2 = lyap_dense(T2, W2);
    CHECK(std::abs(Y2(0, 0) - cplx(0.5, 0)) <= 1e-14);
    CHECK(std::abs(Y2(0, 1) - cplx(1.0 / 3.0, 0)) <= 1e-14);
    CHECK(std::abs(Y2(1, 0) - cplx(1.0 / 3.0, 0)) <= 1e-14);
    CHECK(std::abs(Y2(1, 1) - cplx(0.25, 0)) <= 1e-14);
}

TEST_CASE("lyap_dense residual on random stable matrices") {
    CounterRng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform() * 26);
        DenseCplx T = random_cplx(n, n, rng);
        for (int i = 0; i < n; ++i) T(i, i) -= cplx(2.0 * n, 0.0);  // push the field of values left
        DenseCplx b = random_cplx(n, 1, rng);
        DenseCplx W(n, n);
        blas::gemm_nn(cplx(1, 0), b, conj_transpose(b), cplx(0, 0), W);
        DenseCplx Y = lyap_dense(T, W);
        DenseCplx R = blas::matmul(T, Y);
        DenseCplx YT(n, n);
        blas::gemm_nn(cplx(1, 0), Y, conj_transpose(T), cplx(0, 0), YT);
        double scale = frob_norm(T) * frob_norm(Y) + frob_norm(W);
        CHECK(frob_norm(R + YT + W) <= 1e-11 * scale);
        // hermitian output
        CHECK(frob_norm(Y - conj_transpose(Y)) <= 1e-14 * frob_norm(Y));
    }
}

TEST_CASE("lyap_dense reports spectrum-splitting violations") {
    DenseCplx T(2, 2);
    T(0, 0) = cplx(1, 0);
    T(1, 1) = cplx(-1, 0);  // 1 + conj(-1) = 0
    DenseCplx W = DenseCplx::identity(2);
    CHECK_THROWS_WITH_AS(lyap_dense(T, W), doctest::Contains("spectrum splitting"), std::runtime_error);
}

TEST_CASE("spectral_norm_small hand cases and eigen oracle") {
    DenseReal X(2, 2);
    X(0, 0) = 3.0;
    X(1, 1) = 1.0;
    CHECK(spectral_norm_small(X) == doctest::Approx(3.0).epsilon(1e-12));

    CounterRng rng(8);
    DenseReal u = random_real(15, 1, rng), v = random_real(9, 1, rng);
    DenseReal R1(15, 9);
    for (int j = 0; j < 9; ++j)
        for (int i = 0; i < 15; ++i) R1(i, j) = u(i, 0) * v(j, 0);
    double nu = 0, nv = 0;
    for (int i = 0; i < 15; ++i) nu += u(i, 0) * u(i, 0);
    for (int j = 0; j < 9; ++j) nv += v(j, 0) * v(j, 0);
    CHECK(spectral_norm_small(R1) == doctest::Approx(std::sqrt(nu * nv)).epsilon(1e-10));

    // against brute-force eigenvalues of X^T X
    DenseReal X2 = random_real(20, 7, rng);
    DenseReal G(7, 7);
    blas::gemm_ch(1.0, X2, X2, 0.0, G);
    auto ev = sym_eig_jacobi(G);
    CHECK(spectral_norm_small(X2) == doctest::Approx(std::sqrt(ev.back())).epsilon(1e-10));
}

TEST_CASE("sym_eig_jacobi against known spectrum") {
    // tridiag(-1,2,-1) of size 6: eigenvalues 2-2cos(k pi/7)
    const int n = 6;
    DenseReal T(n, n);
    for (int i = 0; i < n; ++i) {
        T(i, i) = 2.0;
        if (i > 0) T(i, i - 1) = -1.0;
        if (i + 1 < n) T(i, i + 1) = -1.0;
    }
    auto ev = sym_eig_jacobi(T);
    for (int k = 1; k <= n; ++k)
        CHECK(ev[static_cast<size_t>(k - 1)] ==
              doctest::Approx(2.0 - 2.0 * std::cos(std::numbers::pi * k / (n + 1))).epsilon(1e-12));
}

TEST_CASE("lanczos extreme eigenvalues of a dense symmetric operator") {
    CounterRng rng(17);
    const int n = 120;
    DenseReal A0 = random_real(n, n, rng);
    DenseReal S(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) S(i, j) = 0.5 * (A0(i, j) + A0(j, i));
    auto op = [&](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += S(i, j) * x[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = acc;
        }
    };
    auto res = lanczos_extreme<double>(n, op, 120, 1e-10);
    auto ev = sym_eig_jacobi(S);
    CHECK(res.lambda_min == doctest::Approx(ev.front()).epsilon(1e-8));
    CHECK(res.lambda_max == doctest::Approx(ev.back()).epsilon(1e-8));
}
