#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "bispect/vec.hpp"

namespace bispect {

/// Compressed sparse row matrix. After finalize(): column indices sorted and unique
/// within each row, no explicitly stored zeros. Symmetric matrices store both
/// triangles.
struct SparseCSR {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_ptr;  // size n_rows + 1
    std::vector<int> col_idx;
    std::vector<double> values;

    int nnz() const { return static_cast<int>(col_idx.size()); }
    bool row_empty(int r) const { return row_ptr[r] == row_ptr[r + 1]; }
    double at(int r, int c) const;  // 0.0 when not stored
};

/// Builds CSR from coordinate triplets; duplicate entries are summed in insertion
/// order (deterministic), exact zeros are dropped.
SparseCSR csr_from_triplets(int n_rows, int n_cols, const std::vector<int>& rows,
                            const std::vector<int>& cols, const std::vector<double>& vals);

/// y = S x; per-row summation runs in stored (column-sorted) order.
void spmv(const SparseCSR& S, const Vector& x, Vector& y);

/// y = S^T x; scatter in row-major traversal order.
void spmv_transpose(const SparseCSR& S, const Vector& x, Vector& y);

/// S = A^T diag(w) A, exploiting <= 3 nonzeros per row of A. Requires w > 0 elementwise.
SparseCSR form_normal_matrix(const SparseCSR& A, const Vector& w);

/// Fill-reducing permutation: `perm[k]` = original index eliminated at step k.
/// Structurally nonzero rows/columns come first, ordered by minimum degree with the
/// approximate-degree update (aggressive absorption off, ties broken by smallest
/// original index); structurally empty rows follow in index order.
std::vector<int> amd_ordering(const SparseCSR& S);

struct IcholResult {
    SparseCSR L;          // lower triangle, unit pattern of input's lower triangle
    double shift = 0.0;   // diagonal shift applied before the successful factorization
    int attempts = 1;     // 1 = no breakdown
};

/// Zero-fill incomplete Cholesky of an SPD matrix (both triangles stored). On a
/// nonpositive pivot the factorization restarts from S + sigma*I with
/// sigma = 1e-3 * max diagonal, doubling sigma up to `max_retries` extra attempts
/// (the default budget lets sigma pass the diagonal scale, where zero-fill
/// factorization of a positive semidefinite matrix cannot break down);
/// persistent breakdown throws NumericalError.
IcholResult ichol0(const SparseCSR& S, int max_retries = 24);

/// x := L^-T L^-1 b for lower-triangular CSR L.
void ichol_solve(const SparseCSR& L, const Vector& b, Vector& x);

/// Permute + truncate + ichol(0) pipeline for the Gauss-Newton normal matrix.
/// solve() applies the direct (inexact) Newton step; coordinates outside the active
/// block are returned as exact zeros. Safe for concurrent solve() calls.
struct GNFactorization {
    std::vector<int> perm;      // original index at permuted position
    int active = 0;             // leading block with structural nonzeros
    IcholResult factor;

    void solve(const Vector& rhs, Vector& x) const;
};

GNFactorization build_gn_factorization(const SparseCSR& H);

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients on an SPD operator, from x = 0. Stops when
/// ||b - op(x)|| <= rel_tol * ||b||; hitting max_iter is flagged, not an error.
/// Non-finite recurrence values throw NumericalError.
CgResult cg_solve(const std::function<void(const Vector&, Vector&)>& op, const Vector& b,
                  Vector& x, double rel_tol, int max_iter);

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bispect
