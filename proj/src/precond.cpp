#include "lyap/precond.hpp"

#include <cmath>
#include <stdexcept>

namespace lyap {

PrecondKind precond_kind_from_string(const std::string& s) {
    if (s == "none" || s == "identity") return PrecondKind::None;
    if (s == "jacobi") return PrecondKind::Jacobi;
    if (s == "ilu0") return PrecondKind::ILU0;
    if (s == "ilut") return PrecondKind::ILUT;
    if (s == "ic0") return PrecondKind::IC0;
    if (s == "ict") return PrecondKind::ICT;
    throw std::invalid_argument("unknown preconditioner kind: " + s);
}

std::string to_string(PrecondKind k) {
    switch (k) {
        case PrecondKind::None: return "none";
        case PrecondKind::Jacobi: return "jacobi";
        case PrecondKind::ILU0: return "ilu0";
        case PrecondKind::ILUT: return "ilut";
        case PrecondKind::IC0: return "ic0";
        case PrecondKind::ICT: return "ict";
    }
    return "?";
}

namespace {

Preconditioner build_jacobi(const SparseMatrix& A) {
    Preconditioner P;
    P.kind = PrecondKind::Jacobi;
    P.n = A.n_rows;
    P.diag_inv.assign(A.n_rows, 0.0);
    for (int i = 0; i < A.n_rows; ++i) {
        double d = 0.0;
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
            if (A.col_idx[p] == i) d = A.values[p];
        if (d == 0.0) throw std::runtime_error("jacobi: zero pivot at row " + std::to_string(i));
        P.diag_inv[i] = 1.0 / d;
    }
    return P;
}

// row-wise ILU; keep_all restricts fill to the input pattern (ILU0),
// otherwise entries below droptol * ||row||_2 are dropped (ILUT)
Preconditioner build_ilu(const SparseMatrix& A, bool ilu0, double droptol) {
    const int n = A.n_rows;
    Preconditioner P;
    P.kind = ilu0 ? PrecondKind::ILU0 : PrecondKind::ILUT;
    P.n = n;
    SparseMatrix& L = P.L;
    SparseMatrix& U = P.U;
    L.n_rows = L.n_cols = U.n_rows = U.n_cols = n;
    L.row_ptr.assign(n + 1, 0);
    U.row_ptr.assign(n + 1, 0);

    std::vector<double> w(n, 0.0);
    std::vector<char> inpat(n, 0);
    // U rows are accessed during later eliminations; keep per-row slices
    for (int i = 0; i < n; ++i) {
        double rownorm = 0.0;
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            w[A.col_idx[p]] = A.values[p];
            inpat[A.col_idx[p]] = 1;
            rownorm += A.values[p] * A.values[p];
        }
        rownorm = std::sqrt(rownorm);
        const double drop = ilu0 ? 0.0 : droptol * rownorm;
        for (int k = 0; k < i; ++k) {
            if (!inpat[k] || w[k] == 0.0) continue;
            const double ukk = U.values[U.row_ptr[k]];
            const double lik = w[k] / ukk;
            if (!ilu0 && std::abs(lik) < drop) {
                w[k] = 0.0;
                inpat[k] = 0;
                continue;
            }
            w[k] = lik;
            for (int p = U.row_ptr[k] + 1; p < U.row_ptr[k + 1]; ++p) {
                const int j = U.col_idx[p];
                if (ilu0 && !inpat[j]) continue;  // no fill outside the pattern
                w[j] -= lik * U.values[p];
                inpat[j] = 1;
            }
        }
        if (!inpat[i] || w[i] == 0.0) {
            for (int k = 0; k < n; ++k) {
                w[k] = 0.0;
                inpat[k] = 0;
            }
            throw std::runtime_error("ilu: zero pivot at row " + std::to_string(i));
        }
        for (int k = 0; k < i; ++k) {
            if (!inpat[k]) continue;
            if (w[k] != 0.0) {
                L.col_idx.push_back(k);
                L.values.push_back(w[k]);
            }
            w[k] = 0.0;
            inpat[k] = 0;
        }
        U.col_idx.push_back(i);  // diagonal first
        U.values.push_back(w[i]);
        w[i] = 0.0;
        inpat[i] = 0;
        for (int k = i + 1; k < n; ++k) {
            if (!inpat[k]) continue;
            if (w[k] != 0.0 && (ilu0 || std::abs(w[k]) >= drop)) {
                U.col_idx.push_back(k);
                U.values.push_back(w[k]);
            }
            w[k] = 0.0;
            inpat[k] = 0;
        }
        L.row_ptr[i + 1] = static_cast<int>(L.col_idx.size());
        U.row_ptr[i + 1] = static_cast<int>(U.col_idx.size());
    }
    return P;
}

// row-wise incomplete Cholesky; ic0 keeps the lower input pattern, ICT drops
// below droptol * ||row||_2. Row i of L ends with its diagonal entry.
Preconditioner build_ic(const SparseMatrix& A, bool ic0, double droptol) {
    const int n = A.n_rows;
    if (!is_symmetric(A)) throw std::invalid_argument("ic: input matrix is not symmetric");
    Preconditioner P;
    P.kind = ic0 ? PrecondKind::IC0 : PrecondKind::ICT;
    P.n = n;
    SparseMatrix& L = P.L;
    L.n_rows = L.n_cols = n;
    L.row_ptr.assign(n + 1, 0);

    std::vector<double> w(n, 0.0);
    std::vector<char> inpat(n, 0);
    std::vector<double> diag(n, 0.0);
    // column lists of finished entries, needed for the updates
    std::vector<std::vector<std::pair<int, double>>> col_entries(n);

    for (int i = 0; i < n; ++i) {
        double rownorm = 0.0;
        bool has_diag = false;
        for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            const int j = A.col_idx[p];
            rownorm += A.values[p] * A.values[p];
            if (j > i) continue;
            w[j] = A.values[p];
            inpat[j] = 1;
            if (j == i) has_diag = true;
        }
        rownorm = std::sqrt(rownorm);
        if (!has_diag || w[i] <= 0.0) {
            for (int k = 0; k <= i; ++k) {
                w[k] = 0.0;
                inpat[k] = 0;
            }
            throw std::runtime_error("ic: nonpositive pivot at row " + std::to_string(i));
        }
        const double drop = ic0 ? 0.0 : droptol * rownorm;
        double d = w[i];
        for (int k = 0; k < i; ++k) {
            if (!inpat[k] || w[k] == 0.0) continue;
            const double lik = w[k] / diag[k];
            if (!ic0 && std::abs(lik) < drop) {
                w[k] = 0.0;
                inpat[k] = 0;
                continue;
            }
            w[k] = lik;
            // updates from column k of L only touch indices above k
            for (const auto& [j, ljk] : col_entries[k]) {
                if (j >= i) continue;
                if (ic0 && !inpat[j]) continue;
                w[j] -= lik * ljk;
                inpat[j] = 1;
            }
            d -= lik * lik;
        }
        if (d <= 0.0) {
            for (int k = 0; k <= i; ++k) {
                w[k] = 0.0;
                inpat[k] = 0;
            }
            throw std::runtime_error("ic: nonpositive pivot at row " + std::to_string(i));
        }
        diag[i] = std::sqrt(d);
        for (int k = 0; k < i; ++k) {
            if (!inpat[k]) continue;
            if (w[k] != 0.0) {
                L.col_idx.push_back(k);
                L.values.push_back(w[k]);
                col_entries[k].emplace_back(i, w[k]);
            }
            w[k] = 0.0;
            inpat[k] = 0;
        }
        L.col_idx.push_back(i);
        L.values.push_back(diag[i]);
        w[i] = 0.0;
        inpat[i] = 0;
        L.row_ptr[i + 1] = static_cast<int>(L.col_idx.size());
    }
    return P;
}

}  // namespace

Preconditioner build_preconditioner(const SparseMatrix& A, PrecondKind kind, double droptol) {
    if (A.n_rows != A.n_cols) throw std::invalid_argument("build_preconditioner: matrix not square");
    switch (kind) {
        case PrecondKind::None: {
            Preconditioner P;
            P.n = A.n_rows;
            return P;
        }
        case PrecondKind::Jacobi: return build_jacobi(A);
        case PrecondKind::ILU0: return build_ilu(A, true, 0.0);
        case PrecondKind::ILUT: return build_ilu(A, false, droptol);
        case PrecondKind::IC0: return build_ic(A, true, 0.0);
        case PrecondKind::ICT: return build_ic(A, false, droptol);
    }
    throw std::logic_error("build_preconditioner: unreachable");
}

}  // namespace lyap
