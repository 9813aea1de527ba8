#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lyap/dense.hpp"
#include "lyap/sparse.hpp"

namespace lyap {

// A X M^T + M X A^T = -B B^T with A stable. M is the identity for the
// standard equation. Generators are pure functions of their parameters and
// seed, so rebuilt problems are bytewise identical.
struct LyapunovProblem {
    SparseMatrix A;
    SparseMatrix M;
    DenseReal B;
    bool symmetric = false;  // A = A^T and M = M^T, verified at build
    std::string name;
    std::string params;
    std::uint64_t rng_seed = 0;

    int dim() const { return A.n_rows; }
    int rhs_cols() const { return B.cols(); }
    void check() const;
};

// Centered finite differences for a convection-diffusion operator on the
// unit square (Dirichlet boundary, grid_n interior points per direction).
// Convection coefficients are taken at edge midpoints, which keeps the
// symmetric part of A equal to the pure diffusion part and hence negative
// definite. B is a seeded standard Gaussian n x r matrix.
LyapunovProblem gen_cd2d(int grid_n, int r, std::uint64_t seed);

// 7-point Laplacian on the unit cube; A symmetric negative definite, M = I.
LyapunovProblem gen_heat3d(int grid_n, int r, std::uint64_t seed);

// First-order linearization of a damped mass-spring chain system with a
// rank-two skew coupling, perfect-shuffle permuted so A and M are banded;
// M is diagonal. B has 2*m_pairs columns of units.
LyapunovProblem gen_msd(int n1, int m_pairs);

// Assembles a problem from Matrix Market files. M defaults to the identity
// when no path is given.
LyapunovProblem load_matrix_market(const std::string& path_a, const std::optional<std::string>& path_m,
                                   const std::string& path_b);

}  // namespace lyap
