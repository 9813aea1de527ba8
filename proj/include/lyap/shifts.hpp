#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lyap/dense.hpp"
#include "lyap/eig.hpp"
#include "lyap/ortho.hpp"
#include "lyap/sparse.hpp"

namespace lyap {

// Pool of shift parameters, either supplied by the user (cycled on
// exhaustion) or generated adaptively by the solvers.
struct ShiftSource {
    enum class Kind { Adaptive, UserList };
    Kind kind = Kind::Adaptive;
    std::vector<cplx> user;

    static ShiftSource adaptive() { return {}; }
    static ShiftSource list(std::vector<cplx> v) {
        ShiftSource s;
        s.kind = Kind::UserList;
        s.user = std::move(v);
        return s;
    }
};

// |largest eigenvalue| estimate from a few power-iteration steps, used to
// seed the spectral-region estimate before any Ritz values exist
template <class Op>
double power_lambda_max(int n, Op&& op, int iters = 10) {
    std::vector<double> v(static_cast<size_t>(n)), w(static_cast<size_t>(n));
    CounterRng rng(0xabcdef12ULL);
    for (auto& e : v) e = rng.uniform_symmetric();
    double nv = blas::nrm2<double>(std::span<const double>(v));
    blas::scal<double>(1.0 / nv, std::span<double>(v));
    double lam = 1.0;
    for (int it = 0; it < iters; ++it) {
        op(std::span<const double>(v.data(), v.size()), std::span<double>(w));
        lam = blas::nrm2<double>(std::span<const double>(w));
        if (lam == 0.0) return 1.0;
        for (size_t i = 0; i < v.size(); ++i) v[i] = w[i] / lam;
    }
    return lam;
}

namespace detail {

// Andrew monotone chain; returns hull vertices in counterclockwise order
inline std::vector<cplx> convex_hull(std::vector<cplx> pts) {
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](cplx a, cplx b) { return a == b; }), pts.end());
    const int n = static_cast<int>(pts.size());
    if (n <= 2) return pts;
    auto cross = [](cplx o, cplx a, cplx b) {
        return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
    };
    std::vector<cplx> hull(static_cast<size_t>(2 * n));
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[static_cast<size_t>(k - 2)], hull[static_cast<size_t>(k - 1)], pts[static_cast<size_t>(i)]) <= 0) --k;
        hull[static_cast<size_t>(k++)] = pts[static_cast<size_t>(i)];
    }
    for (int i = n - 2, t = k + 1; i >= 0; --i) {
        while (k >= t && cross(hull[static_cast<size_t>(k - 2)], hull[static_cast<size_t>(k - 1)], pts[static_cast<size_t>(i)]) <= 0) --k;
        hull[static_cast<size_t>(k++)] = pts[static_cast<size_t>(i)];
    }
    hull.resize(static_cast<size_t>(k - 1));
    return hull;
}

}  // namespace detail

// Discretized boundary of the spectral-region estimate spanned by the given
// points (the mirrored Ritz values plus the seed estimate). A realvalued set
// yields log-spaced samples of the enclosing interval; otherwise the convex
// hull edges are sampled.
inline std::vector<cplx> region_boundary(std::span<const cplx> points, int samples = 60) {
    std::vector<cplx> out;
    if (points.empty()) return out;
    double max_im = 0.0, max_abs_re = 0.0;
    for (const cplx& p : points) {
        max_im = std::max(max_im, std::abs(p.imag()));
        max_abs_re = std::max(max_abs_re, std::abs(p.real()));
    }
    if (max_im <= 1e-10 * std::max(max_abs_re, 1e-300)) {
        double lo = points[0].real(), hi = points[0].real();
        for (const cplx& p : points) {
            lo = std::min(lo, p.real());
            hi = std::max(hi, p.real());
        }
        lo = std::max(lo, 1e-300);
        hi = std::max(hi, lo);
        if (hi <= lo * (1.0 + 1e-12)) return {cplx(lo, 0.0)};
        const double llo = std::log(lo), lhi = std::log(hi);
        for (int i = 0; i < samples; ++i)
            out.emplace_back(std::exp(llo + (lhi - llo) * i / (samples - 1)), 0.0);
        return out;
    }
    // conjugate-symmetric closure keeps the region symmetric about the axis
    std::vector<cplx> pts(points.begin(), points.end());
    for (const cplx& p : points) pts.push_back(std::conj(p));
    std::vector<cplx> hull = detail::convex_hull(std::move(pts));
    if (hull.size() <= 2) {
        out = hull;
        return out;
    }
    const int per_edge = std::max(1, samples / static_cast<int>(hull.size()));
    for (size_t e = 0; e < hull.size(); ++e) {
        const cplx a = hull[e], b = hull[(e + 1) % hull.size()];
        for (int i = 0; i < per_edge; ++i) out.push_back(a + (b - a) * (static_cast<double>(i) / per_edge));
    }
    // the real symmetry axis crosses the region; log-spaced samples along it
    // cover spectra that span several decades
    {
        double lo = 1e300, hi = -1e300;
        for (const cplx& p : hull) {
            lo = std::min(lo, p.real());
            hi = std::max(hi, p.real());
        }
        lo = std::max(lo, 1e-300);
        if (hi > lo * (1.0 + 1e-12)) {
            const double llo = std::log(lo), lhi = std::log(hi);
            for (int i = 0; i < samples; ++i)
                out.emplace_back(std::exp(llo + (lhi - llo) * i / (samples - 1)), 0.0);
        }
    }
    return out;
}

// Next pole: the boundary candidate maximizing the distance product to the
// mirrored Ritz values and the already-used poles, measured after a
// logarithmic map of the right half plane. The map equidistributes the poles
// over spectra spanning several decades, which linear distances cannot do.
// Candidates that coincide with a used pole are skipped; if every candidate
// is excluded the previous shift is reused.
inline cplx adaptive_shift_argmax(std::span<const cplx> mirrored_ritz, std::span<const cplx> used_poles,
                                  std::span<const cplx> candidates, cplx previous_shift) {
    auto logmap = [](cplx w) { return std::log(w); };  // points live in Re > 0
    double best_score = -1e300;
    cplx best = previous_shift;
    bool found = false;
    for (const cplx& z : candidates) {
        if (z.real() <= 0.0) continue;  // poles must stay in the right half plane
        bool coincides = false;
        for (const cplx& p : used_poles)
            if (std::abs(z - p) <= 1e-12 * (1.0 + std::abs(z))) {
                coincides = true;
                break;
            }
        if (coincides) continue;
        const cplx lz = logmap(z);
        double score = 0.0;
        for (const cplx& t : mirrored_ritz)
            if (t.real() > 0.0) score += std::log(std::max(std::abs(lz - logmap(t)), 1e-300));
        for (const cplx& p : used_poles)
            if (p.real() > 0.0) score += std::log(std::max(std::abs(lz - logmap(p)), 1e-300));
        if (score > best_score) {
            best_score = score;
            best = z;
            found = true;
        }
    }
    return found ? best : previous_shift;
}

// Stable eigenvalues of the projected pencil (U^T A U, U^T M U) as shift
// representatives: conjugate pairs made exact, real values kept as they are.
struct ProjectedShiftCandidates {
    DenseReal Ap;  // projected stiffness
    DenseReal Mp;  // projected mass
    std::vector<cplx> reps;       // Im >= 0 representatives
    std::vector<bool> pair_flag;  // true if the representative stands for a conjugate pair
};

inline ProjectedShiftCandidates projected_shift_candidates(const SparseMatrix& A, const SparseMatrix& M,
                                                           const DenseReal& U) {
    ProjectedShiftCandidates out;
    const int k = U.cols();
    if (k == 0) return out;
    DenseReal AU = blas::spmv(A, U);
    DenseReal MU = blas::spmv(M, U);
    out.Ap = blas::matmul_ch(U, AU);
    out.Mp = blas::matmul_ch(U, MU);
    DenseReal T = out.Ap;
    DenseLU<double> lu;
    lu.factor(out.Mp);
    lu.solve_in_place(T);  // Mp^{-1} Ap
    std::vector<cplx> ev = eigenvalues(T);
    std::vector<cplx> stable;
    for (const cplx& e : ev)
        if (e.real() < 0.0) stable.push_back(e);
    const double im_tol = 1e-10;
    std::vector<bool> used(stable.size(), false);
    for (size_t i = 0; i < stable.size(); ++i) {
        if (used[i]) continue;
        const double scale = std::abs(stable[i]);
        if (std::abs(stable[i].imag()) <= im_tol * std::max(scale, 1e-300)) {
            out.reps.emplace_back(stable[i].real(), 0.0);
            out.pair_flag.push_back(false);
            used[i] = true;
            continue;
        }
        size_t best = i;
        double bestd = 1e300;
        for (size_t j = i + 1; j < stable.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(stable[j] - std::conj(stable[i]));
            if (d < bestd) {
                bestd = d;
                best = j;
            }
        }
        used[i] = true;
        if (best != i && bestd <= 1e-6 * std::max(scale, 1e-300)) {
            used[best] = true;
            const cplx avg = 0.5 * (stable[i] + std::conj(stable[best]));
            out.reps.emplace_back(avg.real(), std::abs(avg.imag()));
        } else {
            out.reps.emplace_back(stable[i].real(), std::abs(stable[i].imag()));
        }
        out.pair_flag.push_back(true);
    }
    return out;
}

// Next shift batch for the low-rank iteration: among the stable projected
// Ritz values, pick the one whose Cayley step damps the projected residual
// factor the most (per step, so pairs compete fairly with single real
// shifts). Returns the pair with the conjugate adjacent, or the single real
// shift. wp is the residual factor projected onto the same basis.
inline std::vector<cplx> adi_projection_shift_batch(const ProjectedShiftCandidates& cand, const DenseCplx& wp) {
    std::vector<cplx> batch;
    if (cand.reps.empty()) return batch;
    const int k = cand.Ap.rows();
    DenseCplx Apc = to_complex(cand.Ap), Mpc = to_complex(cand.Mp);
    double best_rate = 1e300;
    size_t best = 0;
    const double wnorm = frob_norm(wp);
    for (size_t i = 0; i < cand.reps.size(); ++i) {
        const cplx a = cand.reps[i];
        auto cayley_apply = [&](cplx alpha, const DenseCplx& X) {
            DenseCplx K(k, k), N(k, k);
            for (int c = 0; c < k; ++c)
                for (int rrow = 0; rrow < k; ++rrow) {
                    K(rrow, c) = Apc(rrow, c) + alpha * Mpc(rrow, c);
                    N(rrow, c) = Apc(rrow, c) - std::conj(alpha) * Mpc(rrow, c);
                }
            DenseLU<cplx> lu;
            lu.factor(std::move(K));
            DenseCplx t = X;
            lu.solve_in_place(t);
            return blas::matmul(N, t);
        };
        double rate;
        if (cand.pair_flag[i]) {
            DenseCplx w1 = cayley_apply(a, wp);
            DenseCplx w2 = cayley_apply(std::conj(a), w1);
            rate = std::sqrt(frob_norm(w2) / std::max(wnorm, 1e-300));
        } else {
            DenseCplx w1 = cayley_apply(a, wp);
            rate = frob_norm(w1) / std::max(wnorm, 1e-300);
        }
        if (rate < best_rate) {
            best_rate = rate;
            best = i;
        }
    }
    const cplx a = cand.reps[best];
    if (cand.pair_flag[best]) {
        batch.push_back(a);
        batch.push_back(std::conj(a));
    } else {
        batch.push_back(a);
    }
    return batch;
}

}  // namespace lyap
