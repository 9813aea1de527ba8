#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lyap/blas.hpp"

namespace lyap {

struct LinearSolveReport {
    int iterations = 0;
    double final_residual_norm = 0.0;  // recomputed true residual at exit
    bool converged = false;
    bool breakdown = false;
    bool stagnated = false;
    double recursion_drift = 0.0;  // ||recursive residual - true residual|| at exit
};

inline constexpr int kStagnationWindow = 50;

// Right-preconditioned BiCGstab. op(x,y) computes y = Op x, prec(x)
// overwrites x with P^{-1} x. Convergence means the *recomputed* residual
// b - Op x has norm <= tau (absolute); the recursive residual alone is never
// trusted at exit. Restarts from the true residual if the recursion drifted.
template <class S, class OpFn, class PrecFn>
LinearSolveReport bicgstab(int n, OpFn&& op, std::span<const S> b, PrecFn&& prec, std::span<S> x, double tau,
                           int maxit) {
    LinearSolveReport rep;
    std::vector<S> r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n), work(n);
    for (int i = 0; i < n; ++i) {
        x[i] = S{};
        r[i] = b[i];
    }
    auto true_residual = [&](std::vector<S>& out) {
        op(std::span<const S>(x.data(), x.size()), std::span<S>(out));
        for (int i = 0; i < n; ++i) out[i] = b[i] - out[i];
        return blas::nrm2<S>(std::span<const S>(out));
    };
    double rnorm = blas::nrm2<S>(std::span<const S>(r));
    if (rnorm <= tau) {
        rep.converged = true;
        rep.final_residual_norm = rnorm;
        return rep;
    }
    rhat = r;
    S rho{1}, alpha{1}, omega{1};
    std::fill(p.begin(), p.end(), S{});
    std::fill(v.begin(), v.end(), S{});
    bool fresh = true;
    double best = rnorm;
    int no_improve = 0;
    while (rep.iterations < maxit) {
        const S rho1 = blas::dot<S>(std::span<const S>(rhat), std::span<const S>(r));
        if (std::abs(rho1) < 1e-300) {
            rep.breakdown = true;
            break;
        }
        if (fresh) {
            p = r;
            fresh = false;
        } else {
            const S beta = (rho1 / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho1;
        phat = p;
        prec(std::span<S>(phat));
        op(std::span<const S>(phat.data(), phat.size()), std::span<S>(v));
        const S dvr = blas::dot<S>(std::span<const S>(rhat), std::span<const S>(v));
        if (std::abs(dvr) < 1e-300) {
            rep.breakdown = true;
            break;
        }
        alpha = rho1 / dvr;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        ++rep.iterations;
        double snorm = blas::nrm2<S>(std::span<const S>(s));
        if (snorm <= tau) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
            const double tn = true_residual(work);
            if (tn <= tau) {
                rep.converged = true;
                rep.final_residual_norm = tn;
                std::vector<S> diff(n);
                for (int i = 0; i < n; ++i) diff[i] = s[i] - work[i];
                rep.recursion_drift = blas::nrm2<S>(std::span<const S>(diff));
                return rep;
            }
            r = work;  // restart from the true residual
            rnorm = tn;
            rhat = r;
            fresh = true;
            rho = alpha = omega = S{1};
            continue;
        }
        shat = s;
        prec(std::span<S>(shat));
        op(std::span<const S>(shat.data(), shat.size()), std::span<S>(t));
        const S tt = blas::dot<S>(std::span<const S>(t), std::span<const S>(t));
        if (std::abs(tt) < 1e-300) {
            rep.breakdown = true;
            break;
        }
        omega = blas::dot<S>(std::span<const S>(t), std::span<const S>(s)) / tt;
        for (int i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rnorm = blas::nrm2<S>(std::span<const S>(r));
        if (rnorm < best * (1.0 - 1e-8)) {
            best = rnorm;
            no_improve = 0;
        } else if (++no_improve >= kStagnationWindow) {
            rep.stagnated = true;
            break;
        }
        if (rnorm <= tau) {
            const double tn = true_residual(work);
            if (tn <= tau) {
                rep.converged = true;
                rep.final_residual_norm = tn;
                std::vector<S> diff(n);
                for (int i = 0; i < n; ++i) diff[i] = r[i] - work[i];
                rep.recursion_drift = blas::nrm2<S>(std::span<const S>(diff));
                return rep;
            }
            r = work;
            rnorm = tn;
            rhat = r;
            fresh = true;
            rho = alpha = omega = S{1};
        }
    }
    const double tn = true_residual(work);
    rep.final_residual_norm = tn;
    rep.converged = tn <= tau;
    std::vector<S> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = r[i] - work[i];
    rep.recursion_drift = blas::nrm2<S>(std::span<const S>(diff));
    return rep;
}

// Preconditioned MINRES for symmetric operators with an SPD preconditioner.
// The short recurrence runs in the inner product induced by the
// preconditioner (which leaves the unpreconditioned residual norm equal to
// the monitored one when P = I); convergence is declared on the recomputed
// true residual b - Op x, which is what the outer iteration consumes.
template <class OpFn, class PrecFn>
LinearSolveReport minres(int n, OpFn&& op, std::span<const double> b, PrecFn&& prec, std::span<double> x, double tau,
                         int maxit, std::vector<double>* resid_history = nullptr) {
    LinearSolveReport rep;
    std::vector<double> r1(n), r2(n), z(n), v(n), y(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0), work(n);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.0;
        r1[i] = b[i];
    }
    auto true_residual = [&](std::vector<double>& out) {
        op(std::span<const double>(x.data(), x.size()), std::span<double>(out));
        for (int i = 0; i < n; ++i) out[i] = b[i] - out[i];
        return blas::nrm2<double>(std::span<const double>(out));
    };
    z = r1;
    prec(std::span<double>(z));
    double beta1sq = blas::dot<double>(std::span<const double>(r1), std::span<const double>(z));
    if (beta1sq < 0.0) {
        rep.breakdown = true;  // preconditioner not positive definite
        rep.final_residual_norm = blas::nrm2<double>(std::span<const double>(r1));
        return rep;
    }
    double beta = std::sqrt(beta1sq);
    if (beta == 0.0) {
        rep.converged = true;
        return rep;
    }
    r2 = r1;
    double oldb = 0.0, epsln = 0.0, dbar = 0.0, phibar = beta, cs = -1.0, sn = 0.0;
    double check_level = tau;
    while (rep.iterations < maxit) {
        ++rep.iterations;
        const double invb = 1.0 / beta;
        for (int i = 0; i < n; ++i) v[i] = z[i] * invb;
        op(std::span<const double>(v.data(), v.size()), std::span<double>(y));
        if (rep.iterations >= 2) {
            const double c = beta / oldb;
            for (int i = 0; i < n; ++i) y[i] -= c * r1[i];
        }
        const double alfa = blas::dot<double>(std::span<const double>(v), std::span<const double>(y));
        {
            const double c = alfa / beta;
            for (int i = 0; i < n; ++i) y[i] -= c * r2[i];
        }
        r1 = r2;
        r2 = y;
        z = r2;
        prec(std::span<double>(z));
        oldb = beta;
        const double betasq = blas::dot<double>(std::span<const double>(r2), std::span<const double>(z));
        if (betasq < 0.0) {
            rep.breakdown = true;
            break;
        }
        beta = std::sqrt(betasq);
        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::hypot(gbar, beta);
        if (gamma < 1e-300) {
            rep.breakdown = true;
            break;
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;
        if (resid_history) resid_history->push_back(phibar);
        w1 = w2;
        w2 = w;
        for (int i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        for (int i = 0; i < n; ++i) x[i] += phi * w[i];
        if (phibar <= check_level) {
            const double tn = true_residual(work);
            if (tn <= tau) {
                rep.converged = true;
                rep.final_residual_norm = tn;
                rep.recursion_drift = std::abs(phibar - tn);
                return rep;
            }
            check_level *= 0.25;  // the weighted norm under-reports; tighten
        }
        if (phibar <= 1e-300) break;
    }
    const double tn = true_residual(work);
    rep.final_residual_norm = tn;
    rep.converged = tn <= tau;
    rep.recursion_drift = std::abs(phibar - tn);
    return rep;
}

}  // namespace lyap
