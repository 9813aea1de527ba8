#include "lyap/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "lyap/mmio.hpp"
#include "lyap/rng.hpp"

namespace lyap {

void LyapunovProblem::check() const {
    if (A.n_rows != A.n_cols) throw std::invalid_argument("problem: A not square");
    if (M.n_rows != A.n_rows || M.n_cols != A.n_cols) throw std::invalid_argument("problem: M size mismatch");
    if (B.rows() != A.n_rows) throw std::invalid_argument("problem: B row count mismatch");
    if (symmetric && (!is_symmetric(A) || !is_symmetric(M)))
        throw std::invalid_argument("problem: symmetric flag set but matrices are not symmetric");
}

namespace {

DenseReal gaussian_rhs(int n, int r, std::uint64_t seed) {
    DenseReal B(n, r);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < n; ++i)
            B(i, j) = counter_gaussian(seed, static_cast<std::uint64_t>(j) * n + i);
    return B;
}

}  // namespace

LyapunovProblem gen_cd2d(int grid_n, int r, std::uint64_t seed) {
    if (grid_n < 1) throw std::invalid_argument("gen_cd2d: grid_n must be positive");
    const int n = grid_n * grid_n;
    const double h = 1.0 / (grid_n + 1);
    const double ih2 = 1.0 / (h * h);
    auto idx = [grid_n](int ix, int iy) { return iy * grid_n + ix; };
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(5) * n);
    for (int iy = 0; iy < grid_n; ++iy) {
        const double y = (iy + 1) * h;
        for (int ix = 0; ix < grid_n; ++ix) {
            const double x = (ix + 1) * h;
            const int p = idx(ix, iy);
            trip.emplace_back(p, p, -4.0 * ih2);
            // convection coefficients at the edge midpoints keep the
            // asymmetric part exactly skew
            if (ix > 0) trip.emplace_back(p, idx(ix - 1, iy), ih2 + 100.0 * (x - 0.5 * h) / (2.0 * h));
            if (ix + 1 < grid_n) trip.emplace_back(p, idx(ix + 1, iy), ih2 - 100.0 * (x + 0.5 * h) / (2.0 * h));
            if (iy > 0) trip.emplace_back(p, idx(ix, iy - 1), ih2 + 200.0 * (y - 0.5 * h) / (2.0 * h));
            if (iy + 1 < grid_n) trip.emplace_back(p, idx(ix, iy + 1), ih2 - 200.0 * (y + 0.5 * h) / (2.0 * h));
        }
    }
    LyapunovProblem prob;
    prob.A = SparseMatrix::from_triplets(n, n, std::move(trip));
    prob.M = SparseMatrix::identity(n);
    prob.B = gaussian_rhs(n, r, seed);
    prob.symmetric = false;
    prob.name = "cd2d";
    prob.params = "grid_n=" + std::to_string(grid_n) + ",r=" + std::to_string(r);
    prob.rng_seed = seed;
    prob.check();
    return prob;
}

LyapunovProblem gen_heat3d(int grid_n, int r, std::uint64_t seed) {
    if (grid_n < 1) throw std::invalid_argument("gen_heat3d: grid_n must be positive");
    const int n = grid_n * grid_n * grid_n;
    const double h = 1.0 / (grid_n + 1);
    const double ih2 = 1.0 / (h * h);
    auto idx = [grid_n](int ix, int iy, int iz) { return (iz * grid_n + iy) * grid_n + ix; };
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(7) * n);
    for (int iz = 0; iz < grid_n; ++iz)
        for (int iy = 0; iy < grid_n; ++iy)
            for (int ix = 0; ix < grid_n; ++ix) {
                const int p = idx(ix, iy, iz);
                trip.emplace_back(p, p, -6.0 * ih2);
                if (ix > 0) trip.emplace_back(p, idx(ix - 1, iy, iz), ih2);
                if (ix + 1 < grid_n) trip.emplace_back(p, idx(ix + 1, iy, iz), ih2);
                if (iy > 0) trip.emplace_back(p, idx(ix, iy - 1, iz), ih2);
                if (iy + 1 < grid_n) trip.emplace_back(p, idx(ix, iy + 1, iz), ih2);
                if (iz > 0) trip.emplace_back(p, idx(ix, iy, iz - 1), ih2);
                if (iz + 1 < grid_n) trip.emplace_back(p, idx(ix, iy, iz + 1), ih2);
            }
    LyapunovProblem prob;
    prob.A = SparseMatrix::from_triplets(n, n, std::move(trip));
    prob.M = SparseMatrix::identity(n);
    prob.B = gaussian_rhs(n, r, seed);
    prob.symmetric = true;
    prob.name = "heat3d";
    prob.params = "grid_n=" + std::to_string(grid_n) + ",r=" + std::to_string(r);
    prob.rng_seed = seed;
    prob.check();
    return prob;
}

LyapunovProblem gen_msd(int n1, int m_pairs) {
    if (n1 < 2) throw std::invalid_argument("gen_msd: n1 must be at least 2");
    const int n2 = 3 * n1 + 1;
    const int n = 2 * n2;
    const int m = m_pairs;
    if (m < 1 || n2 - m < m) throw std::invalid_argument("gen_msd: m_pairs out of range");
    const double k0 = 0.1, k1 = 1.0, k2 = 2.0, k3 = 4.0;
    const double m0 = 1000.0, m1 = 10.0, m2 = k2, m3 = k3;
    const double alpha = 0.8, beta = 0.1, nu = 16.0;

    // stiffness: three decoupled chains, a grounded common mass, and a
    // rank-two skew coupling between the chain ends and the common mass
    DenseReal K(n2, n2);
    for (int blk = 0; blk < 3; ++blk) {
        const int off = blk * n1;
        for (int i = 0; i < n1; ++i) {
            K(off + i, off + i) = 2.0;
            if (i > 0) K(off + i, off + i - 1) = -1.0;
            if (i + 1 < n1) K(off + i, off + i + 1) = -1.0;
        }
    }
    K(n2 - 1, n2 - 1) = k0 + k1 + k2 + k3;
    std::vector<double> kplus(n2, 0.0);
    kplus[n1 - 1] = k1;
    kplus[2 * n1 - 1] = k2;
    kplus[3 * n1 - 1] = k3;
    for (int i = 0; i < n2; ++i) {
        K(i, n2 - 1) += kplus[i];
        K(n2 - 1, i) -= kplus[i];
    }

    std::vector<double> mass(n2);
    for (int i = 0; i < n1; ++i) mass[i] = m1;
    for (int i = n1; i < 2 * n1; ++i) mass[i] = m2;
    for (int i = 2 * n1; i < 3 * n1; ++i) mass[i] = m3;
    mass[n2 - 1] = m0;

    // damping D = alpha*M1 + beta*(K + K(M1^-1 K) + K(M1^-1 K)^2 + K(M1^-1 K)^3) + nu F F^T
    DenseReal P = K;  // P_k = K (M1^-1 K)^k
    DenseReal D(n2, n2);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n2; ++i) D(i, j) = beta * P(i, j);
    for (int i = 0; i < n2; ++i) D(i, i) += alpha * mass[i];
    for (int step = 0; step < 3; ++step) {
        DenseReal MinvP(n2, n2);
        for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n2; ++i) MinvP(i, j) = P(i, j) / mass[i];
        DenseReal next(n2, n2);
        blas::gemm_nn(1.0, K, MinvP, 0.0, next);
        P = std::move(next);
        for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n2; ++i) D(i, j) += beta * P(i, j);
    }
    const int fcols[3] = {0, n1 - 1, 2 * n1};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) D(fcols[a], fcols[b]) += nu;

    // first-order block form [0 I; -K -D], mass diag(I, M1), then the
    // perfect shuffle interleaving positions and velocities
    auto shuffled = [n2](int idx_orig) {
        return idx_orig < n2 ? 2 * idx_orig : 2 * (idx_orig - n2) + 1;
    };
    std::vector<std::tuple<int, int, double>> atrip, mtrip;
    for (int i = 0; i < n2; ++i) {
        atrip.emplace_back(shuffled(i), shuffled(n2 + i), 1.0);  // upper identity
        mtrip.emplace_back(shuffled(i), shuffled(i), 1.0);
        mtrip.emplace_back(shuffled(n2 + i), shuffled(n2 + i), mass[i]);
    }
    for (int i = 0; i < n2; ++i)
        for (int j = 0; j < n2; ++j) {
            if (K(i, j) != 0.0) atrip.emplace_back(shuffled(n2 + i), shuffled(j), -K(i, j));
            if (D(i, j) != 0.0) atrip.emplace_back(shuffled(n2 + i), shuffled(n2 + j), -D(i, j));
        }
    LyapunovProblem prob;
    prob.A = SparseMatrix::from_triplets(n, n, std::move(atrip));
    prob.M = SparseMatrix::from_triplets(n, n, std::move(mtrip));
    // B: first 2m unit columns in the position block, mirrored units in the
    // velocity block
    DenseReal B(n, 2 * m);
    for (int j = 0; j < 2 * m; ++j) B(shuffled(j), j) = 1.0;
    for (int j = 0; j < m; ++j) B(shuffled(n2 + (n2 - m) + j), j) += 1.0;
    for (int j = 0; j < m; ++j) B(shuffled(n2 + j), m + j) += 1.0;
    prob.B = std::move(B);
    prob.symmetric = false;
    prob.name = "msd";
    prob.params = "n1=" + std::to_string(n1) + ",m=" + std::to_string(m);
    prob.rng_seed = 0;
    prob.check();
    return prob;
}

LyapunovProblem load_matrix_market(const std::string& path_a, const std::optional<std::string>& path_m,
                                   const std::string& path_b) {
    LyapunovProblem prob;
    prob.A = read_matrix_market(path_a);
    if (path_m)
        prob.M = read_matrix_market(*path_m);
    else
        prob.M = SparseMatrix::identity(prob.A.n_rows);
    prob.B = read_matrix_market_dense(path_b);
    if (prob.B.rows() != prob.A.n_rows)
        throw std::runtime_error("load_matrix_market: B has " + std::to_string(prob.B.rows()) + " rows but A is " +
                                 std::to_string(prob.A.n_rows) + "-dimensional");
    prob.symmetric = is_symmetric(prob.A) && is_symmetric(prob.M);
    prob.name = "mm";
    prob.params = path_a;
    prob.check();
    return prob;
}

}  // namespace lyap
