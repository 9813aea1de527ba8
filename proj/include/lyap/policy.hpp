#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include "lyap/dense.hpp"
#include "lyap/eig.hpp"

namespace lyap {

// Inner-solve tolerance selection for the projection method. eps is the
// absolute residual target (the scaled threshold times the squared
// right-hand-side norm); delta is the safeguard factor.
struct RelaxPolicy {
    enum class Kind { Fixed, Prac1, Prac2 };
    Kind kind = Kind::Fixed;
    double fixed_tau = 1e-10;
    double delta = 0.5;
    double tau_min = 1e-12;
    double tau_max = 0.1;
    // absolute gap budget; zero means the solver's scaled threshold is used
    double eps_override = 0.0;

    void check() const {
        if (!(tau_min > 0.0 && tau_min < tau_max && tau_max <= 1.0))
            throw std::invalid_argument("RelaxPolicy: need 0 < tau_min < tau_max <= 1");
    }
};

struct AdiRelaxPolicy {
    enum class Kind { Fixed, Prac1, Prac2, Theo1, Theo2 };
    Kind kind = Kind::Fixed;
    double fixed_tau = 1e-10;
    double tau_min = 1e-12;
    double tau_max = 0.1;
    double eps_override = 0.0;
    int sigma_dense_limit = 500;  // theo variants need the dense operator norm

    void check() const {
        if (!(tau_min > 0.0 && tau_min < tau_max && tau_max <= 1.0))
            throw std::invalid_argument("AdiRelaxPolicy: need 0 < tau_min < tau_max <= 1");
    }
};

// clamps into [tau_min, tau_max]; non-finite or nonpositive input (degenerate
// denominator) maps to tau_max
inline double clamp_tau(double tau, double tau_min, double tau_max) {
    if (!std::isfinite(tau) || tau <= 0.0) return tau_max;
    return std::min(tau_max, std::max(tau_min, tau));
}

// last block row of Hk^{-1}, premultiplied by the subdiagonal block:
// h_sub * E_k^* Hk^{-1}  (r x k*r)
template <class S>
DenseMatrix<S> scaled_last_block_row_inv(const DenseMatrix<S>& Hk, const DenseMatrix<S>& h_sub, int r) {
    const int kr = Hk.rows();
    // rows of the inverse: solve Hk^T X = E_last, then transpose
    DenseMatrix<S> Ht(kr, kr);
    for (int j = 0; j < kr; ++j)
        for (int i = 0; i < kr; ++i) Ht(i, j) = Hk(j, i);
    DenseMatrix<S> E(kr, r);
    for (int c = 0; c < r; ++c) E(kr - r + c, c) = S{1};
    DenseLU<S> lu;
    lu.factor(std::move(Ht));
    lu.solve_in_place(E);  // columns are rows of Hk^{-1}
    DenseMatrix<S> row(r, kr);
    for (int c = 0; c < r; ++c)
        for (int i = 0; i < kr; ++i) row(c, i) = E(i, c);
    return blas::matmul(h_sub, row);
}

// tau for solve k of the projection method, strategy one: the denominator is
// the norm of the scaled last block row of H_{k-1}^{-1} Y_{k-1}
template <class S>
double rksm_prac1_tau(const DenseMatrix<S>& Hkm1, const DenseMatrix<S>& h_sub, const DenseMatrix<S>& Ykm1, double eps,
                      double delta, int jmax, int r, double tau_min, double tau_max) {
    if (Hkm1.rows() == 0) return clamp_tau(delta * eps / jmax, tau_min, tau_max);
    DenseMatrix<S> row = scaled_last_block_row_inv(Hkm1, h_sub, r);
    DenseMatrix<S> rowY = blas::matmul(row, Ykm1);
    const double denom = spectral_norm_small(rowY);
    return clamp_tau(delta * eps / (jmax * denom), tau_min, tau_max);
}

// strategy two additionally appends an identity block and uses the current Y
template <class S>
double rksm_prac2_tau(const DenseMatrix<S>& Hkm1, const DenseMatrix<S>& h_sub, const DenseMatrix<S>& Yk, double eps,
                      double delta, int jmax, int r, double tau_min, double tau_max) {
    const int kr = Yk.rows();
    if (Hkm1.rows() == 0) return clamp_tau(delta * eps / jmax, tau_min, tau_max);
    DenseMatrix<S> lead = scaled_last_block_row_inv(Hkm1, h_sub, r);  // r x (k-1)r
    DenseMatrix<S> row(r, kr);
    for (int c = 0; c < r; ++c) {
        for (int i = 0; i < lead.cols(); ++i) row(c, i) = -lead(c, i);
        row(c, lead.cols() + c) = S{1};
    }
    DenseMatrix<S> rowY = blas::matmul(row, Yk);
    const double denom = spectral_norm_small(rowY);
    return clamp_tau(delta * eps / (jmax * denom), tau_min, tau_max);
}

// strategy one for the low-rank iteration
inline double adi_prac1_tau(double res_comp_prev, double eps, int jmax, double tau_min, double tau_max) {
    return clamp_tau(eps / (4.0 * jmax * std::sqrt(res_comp_prev)), tau_min, tau_max);
}

// strategy two spends the unused part of the gap budget; a negative
// numerator falls to tau_min
inline double adi_prac2_tau(int k, double res_comp_prev, double u_prev, double eps, int jmax, double tau_min,
                            double tau_max) {
    const double numer = static_cast<double>(k) * eps / jmax - 2.0 * u_prev;
    if (numer <= 0.0) return tau_min;
    return clamp_tau(numer / (4.0 * std::sqrt(res_comp_prev)), tau_min, tau_max);
}

// guaranteed strategies: the positive root of the step's quadratic gap budget
inline double adi_theo1_tau(double w_prev_norm, double sigma_k, double gamma_k2, double eps, int jmax, double tau_min,
                            double tau_max) {
    const double inner = w_prev_norm * w_prev_norm + 2.0 * eps / (sigma_k * gamma_k2 * jmax);
    return clamp_tau(0.5 * (std::sqrt(inner) - w_prev_norm), tau_min, tau_max);
}

inline double adi_theo2_tau(int k, double w_prev_norm, double sigma_k, double gamma_k2, double u_prev, double eps,
                            int jmax, double tau_min, double tau_max) {
    const double budget = static_cast<double>(k) * eps / jmax - 2.0 * u_prev;
    if (budget <= 0.0) return tau_min;
    const double inner = w_prev_norm * w_prev_norm + budget * 2.0 / (sigma_k * gamma_k2);
    return clamp_tau(0.5 * (std::sqrt(inner) - w_prev_norm), tau_min, tau_max);
}

}  // namespace lyap
