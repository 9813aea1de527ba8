#include "lyap/eig.hpp"

#include <cmath>
#include <sstream>

namespace lyap {

namespace {

// rotation zeroing b in (a; b): row form [c s; -conj(s) c] with c real
struct Givens {
    double c = 1.0;
    cplx s{0.0, 0.0};
};

Givens make_givens(cplx a, cplx b) {
    Givens g;
    const double aa = std::abs(a), bb = std::abs(b);
    if (bb == 0.0) return g;
    const double r = std::hypot(aa, bb);
    if (aa == 0.0) {
        g.c = 0.0;
        g.s = std::conj(b) / bb;
        return g;
    }
    const cplx sign_a = a / aa;
    g.c = aa / r;
    g.s = std::conj(b) * sign_a / r;
    return g;
}

// rows i, i+1 of H over columns [jlo, jhi]
void apply_left(DenseCplx& H, int i, const Givens& g, int jlo, int jhi) {
    for (int j = jlo; j <= jhi; ++j) {
        const cplx x = H(i, j), y = H(i + 1, j);
        H(i, j) = g.c * x + g.s * y;
        H(i + 1, j) = -std::conj(g.s) * x + g.c * y;
    }
}

// columns i, i+1 of H over rows [ilo, ihi], right-multiplied by the adjoint
void apply_right(DenseCplx& H, int i, const Givens& g, int ilo, int ihi) {
    for (int r = ilo; r <= ihi; ++r) {
        const cplx x = H(r, i), y = H(r, i + 1);
        H(r, i) = g.c * x + std::conj(g.s) * y;
        H(r, i + 1) = -g.s * x + g.c * y;
    }
}

cplx wilkinson_shift(const DenseCplx& H, int hi) {
    const cplx a = H(hi - 1, hi - 1), b = H(hi - 1, hi);
    const cplx c = H(hi, hi - 1), d = H(hi, hi);
    const cplx tr2 = (a + d) * 0.5;
    const cplx det = a * d - b * c;
    cplx disc = std::sqrt(tr2 * tr2 - det);
    cplx l1 = tr2 + disc, l2 = tr2 - disc;
    return (std::abs(l1 - d) < std::abs(l2 - d)) ? l1 : l2;
}

}  // namespace

void hessenberg_reduce(const DenseCplx& T, DenseCplx& V, DenseCplx& H) {
    if (T.rows() != T.cols()) throw std::invalid_argument("hessenberg_reduce: matrix not square");
    const int n = T.rows();
    H = T;
    V = DenseCplx::identity(n);
    std::vector<cplx> v(static_cast<size_t>(n));
    for (int k = 0; k + 2 < n; ++k) {
        double xnorm = 0.0;
        for (int i = k + 1; i < n; ++i) xnorm += std::norm(H(i, k));
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        const cplx x0 = H(k + 1, k);
        const cplx phase = (std::abs(x0) > 0) ? x0 / std::abs(x0) : cplx(1.0, 0.0);
        const cplx alpha = -phase * xnorm;
        // v = x - alpha e1, beta = 2/||v||^2 reflector
        double vnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) {
            v[i] = H(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // H <- P H from the left (rows k+1..n-1)
        for (int j = k; j < n; ++j) {
            cplx acc{};
            for (int i = k + 1; i < n; ++i) acc += std::conj(v[i]) * H(i, j);
            acc *= beta;
            for (int i = k + 1; i < n; ++i) H(i, j) -= v[i] * acc;
        }
        // H <- H P from the right (columns k+1..n-1)
        for (int i = 0; i < n; ++i) {
            cplx acc{};
            for (int j = k + 1; j < n; ++j) acc += H(i, j) * v[j];
            acc *= beta;
            for (int j = k + 1; j < n; ++j) H(i, j) -= acc * std::conj(v[j]);
        }
        for (int i = 0; i < n; ++i) {
            cplx acc{};
            for (int j = k + 1; j < n; ++j) acc += V(i, j) * v[j];
            acc *= beta;
            for (int j = k + 1; j < n; ++j) V(i, j) -= acc * std::conj(v[j]);
        }
        for (int i = k + 2; i < n; ++i) H(i, k) = cplx{};
        H(k + 1, k) = alpha;
    }
}

SchurForm schur(const DenseCplx& T, int max_sweeps_per_eig) {
    const int n = T.rows();
    if (n != T.cols()) throw std::invalid_argument("schur: matrix not square");
    SchurForm out;
    if (n == 0) return out;
    hessenberg_reduce(T, out.U, out.S);
    DenseCplx& H = out.S;
    DenseCplx& U = out.U;
    const double eps = 2.220446049250313e-16;
    int hi = n - 1;
    int since_deflation = 0;
    long total_iters = 0;
    const long iter_cap = static_cast<long>(max_sweeps_per_eig) * n + 10;
    while (hi > 0) {
        // set negligible subdiagonals to zero
        for (int i = 1; i <= hi; ++i) {
            const double s = std::abs(H(i - 1, i - 1)) + std::abs(H(i, i));
            if (std::abs(H(i, i - 1)) <= eps * (s > 0 ? s : 1.0)) H(i, i - 1) = cplx{};
        }
        if (H(hi, hi - 1) == cplx{}) {
            --hi;
            since_deflation = 0;
            continue;
        }
        int lo = hi;
        while (lo > 0 && H(lo, lo - 1) != cplx{}) --lo;
        if (++total_iters > iter_cap) {
            std::ostringstream msg;
            msg << "schur: QR iteration failed to converge; " << (n - 1 - hi) << " of " << n
                << " eigenvalues deflated";
            throw std::runtime_error(msg.str());
        }
        cplx mu = wilkinson_shift(H, hi);
        if (++since_deflation % 12 == 0) {
            // exceptional shift to break symmetric stalls
            mu = H(hi, hi) + cplx(1.5 * std::abs(H(hi, hi - 1)), 0.0);
        }
        for (int d = lo; d <= hi; ++d) H(d, d) -= mu;
        std::vector<Givens> rots(static_cast<size_t>(hi - lo));
        for (int i = lo; i < hi; ++i) {
            const Givens g = make_givens(H(i, i), H(i + 1, i));
            rots[static_cast<size_t>(i - lo)] = g;
            apply_left(H, i, g, i, n - 1);
            H(i + 1, i) = cplx{};
        }
        for (int i = lo; i < hi; ++i) {
            const Givens& g = rots[static_cast<size_t>(i - lo)];
            apply_right(H, i, g, 0, std::min(i + 2, hi));
            apply_right(U, i, g, 0, n - 1);
        }
        for (int d = lo; d <= hi; ++d) H(d, d) += mu;
    }
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i) H(i, j) = cplx{};
    return out;
}

SchurForm schur(const DenseReal& T) { return schur(to_complex(T)); }

std::vector<cplx> eigenvalues(const DenseCplx& T) { return schur(T).eigenvalues(); }
std::vector<cplx> eigenvalues(const DenseReal& T) { return schur(T).eigenvalues(); }

DenseCplx lyap_dense(const DenseCplx& T, const DenseCplx& W) {
    const int n = T.rows();
    if (T.cols() != n || W.rows() != n || W.cols() != n) throw std::invalid_argument("lyap_dense: dimension mismatch");
    if (n == 0) return {};
    SchurForm sf = schur(T);
    const DenseCplx& S = sf.S;
    // solvability: no eigenvalue pair with s_i + conj(s_j) = 0
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(S(i, i)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (std::abs(S(i, i) + std::conj(S(j, j))) <= 1e-13 * (scale > 0 ? scale : 1.0)) {
                std::ostringstream msg;
                msg << "lyap_dense: spectrum splitting violated by eigenvalue pair (" << S(i, i).real() << "+"
                    << S(i, i).imag() << "i, " << S(j, j).real() << "+" << S(j, j).imag() << "i)";
                throw std::runtime_error(msg.str());
            }
        }
    // C = -U^* W U
    DenseCplx UW = blas::matmul_ch(sf.U, W);
    DenseCplx C = blas::matmul(UW, sf.U);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) C(i, j) = -C(i, j);
    // solve S Yt + Yt S^* = C column-by-column, last column first
    DenseCplx Yt(n, n);
    std::vector<cplx> rhs(static_cast<size_t>(n));
    for (int j = n - 1; j >= 0; --j) {
        for (int i = 0; i < n; ++i) {
            cplx acc = C(i, j);
            for (int k = j + 1; k < n; ++k) acc -= std::conj(S(j, k)) * Yt(i, k);
            rhs[static_cast<size_t>(i)] = acc;
        }
        const cplx shift = std::conj(S(j, j));
        // (S + shift I) y = rhs, upper triangular back substitution
        for (int i = n - 1; i >= 0; --i) {
            cplx acc = rhs[static_cast<size_t>(i)];
            for (int k = i + 1; k < n; ++k) acc -= S(i, k) * Yt(k, j);
            Yt(i, j) = acc / (S(i, i) + shift);
        }
    }
    // back-transform and symmetrize
    DenseCplx UY = blas::matmul(sf.U, Yt);
    DenseCplx Y(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            cplx acc{};
            for (int k = 0; k < n; ++k) acc += UY(i, k) * std::conj(sf.U(j, k));
            Y(i, j) = acc;
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            const cplx v = 0.5 * (Y(i, j) + std::conj(Y(j, i)));
            Y(i, j) = v;
            Y(j, i) = std::conj(v);
        }
    return Y;
}

DenseReal lyap_dense_real(const DenseReal& T, const DenseReal& W) {
    return real_part(lyap_dense(to_complex(T), to_complex(W)));
}

std::vector<double> sym_eig_jacobi(DenseReal A, DenseReal* V, int max_sweeps) {
    const int n = A.rows();
    if (n != A.cols()) throw std::invalid_argument("sym_eig_jacobi: matrix not square");
    if (V) *V = DenseReal::identity(n);
    const double fro = frob_norm(A);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < j; ++i) off += A(i, j) * A(i, j);
        if (std::sqrt(2.0 * off) <= 1e-14 * (fro > 0 ? fro : 1.0)) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                if (V)
                    for (int k = 0; k < n; ++k) {
                        const double vkp = (*V)(k, p), vkq = (*V)(k, q);
                        (*V)(k, p) = c * vkp - s * vkq;
                        (*V)(k, q) = s * vkp + c * vkq;
                    }
            }
    }
    std::vector<double> ev(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<size_t>(i)] = A(i, i);
    // sort ascending, permuting eigenvectors alongside
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ev[static_cast<size_t>(a)] < ev[static_cast<size_t>(b)]; });
    std::vector<double> sorted(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) sorted[static_cast<size_t>(i)] = ev[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    if (V) {
        DenseReal VS(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) VS(i, j) = (*V)(i, idx[static_cast<size_t>(j)]);
        *V = std::move(VS);
    }
    return sorted;
}

}  // namespace lyap
