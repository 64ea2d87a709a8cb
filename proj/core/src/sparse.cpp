#include "bispect/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bispect {

double SparseCSR::at(int r, int c) const {
    const int lo = row_ptr[r];
    const int hi = row_ptr[r + 1];
    auto it = std::lower_bound(col_idx.begin() + lo, col_idx.begin() + hi, c);
    if (it != col_idx.begin() + hi && *it == c) return values[it - col_idx.begin()];
    return 0.0;
}

SparseCSR csr_from_triplets(int n_rows, int n_cols, const std::vector<int>& rows,
                            const std::vector<int>& cols, const std::vector<double>& vals) {
    if (rows.size() != cols.size() || rows.size() != vals.size())
        throw std::invalid_argument("csr_from_triplets: length mismatch");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort keeps insertion order within a (row, col) run, so duplicate
    // accumulation order is deterministic.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rows[a] != rows[b]) return rows[a] < rows[b];
        return cols[a] < cols[b];
    });

    SparseCSR S;
    S.n_rows = n_rows;
    S.n_cols = n_cols;
    S.row_ptr.assign(n_rows + 1, 0);
    S.col_idx.reserve(order.size());
    S.values.reserve(order.size());

    std::size_t k = 0;
    for (int r = 0; r < n_rows; ++r) {
        while (k < order.size() && rows[order[k]] == r) {
            const int c = cols[order[k]];
            if (c < 0 || c >= n_cols || r < 0)
                throw std::invalid_argument("csr_from_triplets: index out of range");
            double v = vals[order[k]];
            ++k;
            while (k < order.size() && rows[order[k]] == r && cols[order[k]] == c) {
                v += vals[order[k]];
                ++k;
            }
            if (v != 0.0) {
                S.col_idx.push_back(c);
                S.values.push_back(v);
            }
        }
        S.row_ptr[r + 1] = static_cast<int>(S.col_idx.size());
    }
    if (k != order.size()) throw std::invalid_argument("csr_from_triplets: row index out of range");
    return S;
}

void spmv(const SparseCSR& S, const Vector& x, Vector& y) {
    y.assign(S.n_rows, 0.0);
    for (int r = 0; r < S.n_rows; ++r) {
        double s = 0.0;
        for (int k = S.row_ptr[r]; k < S.row_ptr[r + 1]; ++k) s += S.values[k] * x[S.col_idx[k]];
        y[r] = s;
    }
}

void spmv_transpose(const SparseCSR& S, const Vector& x, Vector& y) {
    y.assign(S.n_cols, 0.0);
    for (int r = 0; r < S.n_rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (int k = S.row_ptr[r]; k < S.row_ptr[r + 1]; ++k) y[S.col_idx[k]] += S.values[k] * xr;
    }
}

SparseCSR form_normal_matrix(const SparseCSR& A, const Vector& w) {
    if (static_cast<int>(w.size()) != A.n_rows)
        throw std::invalid_argument("form_normal_matrix: weight length mismatch");
    for (double wi : w) {
        if (!(wi > 0.0)) throw std::invalid_argument("form_normal_matrix: weights must be positive");
    }
    std::vector<int> ri, ci;
    std::vector<double> vi;
    ri.reserve(static_cast<std::size_t>(A.nnz()) * 3);
    ci.reserve(ri.capacity());
    vi.reserve(ri.capacity());
    for (int r = 0; r < A.n_rows; ++r) {
        for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
            for (int q = A.row_ptr[r]; q < A.row_ptr[r + 1]; ++q) {
                ri.push_back(A.col_idx[p]);
                ci.push_back(A.col_idx[q]);
                vi.push_back(w[r] * A.values[p] * A.values[q]);
            }
        }
    }
    return csr_from_triplets(A.n_cols, A.n_cols, ri, ci, vi);
}

// ---------------------------------------------------------------------------
// Minimum-degree ordering on the quotient graph with the approximate external
// degree update. No supervariable detection, no aggressive absorption; ties are
// broken by smallest original index, which makes the ordering deterministic.
// ---------------------------------------------------------------------------
std::vector<int> amd_ordering(const SparseCSR& S) {
    if (S.n_rows != S.n_cols) throw std::invalid_argument("amd_ordering: matrix must be square");
    const int n = S.n_rows;

    enum : char { kVar = 0, kEliminated = 1 };
    std::vector<char> state(n, kVar);
    std::vector<char> elem_live(n, 0);
    std::vector<std::vector<int>> adj(n);       // live variable neighbours
    std::vector<std::vector<int>> elems(n);     // adjacent elements (by pivot id)
    std::vector<std::vector<int>> members(n);   // element -> variable list
    std::vector<int> degree(n, 0);
    std::vector<char> is_active(n, 0);

    for (int i = 0; i < n; ++i) {
        if (!S.row_empty(i)) is_active[i] = 1;
        for (int k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) {
            const int j = S.col_idx[k];
            if (j != i) adj[i].push_back(j);
        }
        std::sort(adj[i].begin(), adj[i].end());
        adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
        degree[i] = static_cast<int>(adj[i].size());
    }

    std::vector<int> perm;
    perm.reserve(n);
    std::vector<int> mark(n, 0);
    std::vector<int> elem_stamp(n, 0), elem_size(n, 0);
    int stamp = 0;
    int remaining = 0;
    for (int i = 0; i < n; ++i) remaining += is_active[i];

    std::vector<int> lp;
    while (static_cast<int>(perm.size()) < remaining) {
        int p = -1;
        for (int i = 0; i < n; ++i) {
            if (state[i] == kVar && is_active[i] && (p < 0 || degree[i] < degree[p])) p = i;
        }

        // Lp = (adj[p] u union of member lists of elements of p) minus eliminated.
        ++stamp;
        mark[p] = stamp;
        lp.clear();
        for (int j : adj[p]) {
            if (state[j] == kVar && mark[j] != stamp) {
                mark[j] = stamp;
                lp.push_back(j);
            }
        }
        for (int e : elems[p]) {
            if (!elem_live[e]) continue;
            for (int j : members[e]) {
                if (state[j] == kVar && mark[j] != stamp) {
                    mark[j] = stamp;
                    lp.push_back(j);
                }
            }
            elem_live[e] = 0;  // absorbed into the new element
            members[e].clear();
            members[e].shrink_to_fit();
        }
        elems[p].clear();
        adj[p].clear();
        state[p] = kEliminated;
        elem_live[p] = 1;
        members[p] = lp;
        perm.push_back(p);

        const int lp_size = static_cast<int>(lp.size());
        for (int i : lp) {
            // Drop direct edges covered by the new element (and the pivot itself).
            auto& ai = adj[i];
            ai.erase(std::remove_if(ai.begin(), ai.end(),
                                    [&](int j) { return mark[j] == stamp || state[j] != kVar; }),
                     ai.end());
            auto& ei = elems[i];
            ei.erase(std::remove_if(ei.begin(), ei.end(), [&](int e) { return !elem_live[e]; }),
                     ei.end());
            ei.push_back(p);
        }

        // Approximate external degrees for the variables adjacent to the pivot.
        const int n_left = remaining - static_cast<int>(perm.size());
        for (int i : lp) {
            int ext = static_cast<int>(adj[i].size()) + (lp_size - 1);
            for (int e : elems[i]) {
                if (e == p) continue;
                if (elem_stamp[e] != stamp) {
                    int w = 0;
                    auto& me = members[e];
                    me.erase(std::remove_if(me.begin(), me.end(),
                                            [&](int j) { return state[j] != kVar; }),
                             me.end());
                    for (int j : me)
                        if (mark[j] != stamp) ++w;
                    elem_stamp[e] = stamp;
                    elem_size[e] = w;
                }
                ext += elem_size[e];
            }
            degree[i] = std::min({n_left, degree[i] + lp_size - 1, ext});
        }
    }

    for (int i = 0; i < n; ++i) {
        if (!is_active[i]) perm.push_back(i);
    }
    return perm;
}

// ---------------------------------------------------------------------------
// ichol(0)
// ---------------------------------------------------------------------------
namespace {

bool try_ichol(const SparseCSR& S, double shift, SparseCSR& L) {
    const int n = S.n_rows;
    // Pattern of L = lower triangle of S, diagonal included (column-sorted already).
    L.n_rows = L.n_cols = n;
    L.row_ptr.assign(n + 1, 0);
    L.col_idx.clear();
    L.values.clear();
    for (int i = 0; i < n; ++i) {
        bool has_diag = false;
        for (int k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k) {
            if (S.col_idx[k] > i) break;
            L.col_idx.push_back(S.col_idx[k]);
            L.values.push_back(S.values[k] + (S.col_idx[k] == i ? shift : 0.0));
            if (S.col_idx[k] == i) has_diag = true;
        }
        if (!has_diag) return false;  // structurally missing pivot
        L.row_ptr[i + 1] = static_cast<int>(L.col_idx.size());
    }

    for (int i = 0; i < n; ++i) {
        const int ib = L.row_ptr[i];
        const int ie = L.row_ptr[i + 1];
        for (int k = ib; k < ie; ++k) {
            const int j = L.col_idx[k];
            // Sparse dot of rows i and j over columns < j.
            double s = L.values[k];
            int pa = ib;
            int pb = L.row_ptr[j];
            const int jb_end = L.row_ptr[j + 1] - 1;  // exclude diagonal of row j
            while (pa < k && pb < jb_end) {
                const int ca = L.col_idx[pa];
                const int cb = L.col_idx[pb];
                if (ca == cb) {
                    s -= L.values[pa] * L.values[pb];
                    ++pa;
                    ++pb;
                } else if (ca < cb) {
                    ++pa;
                } else {
                    ++pb;
                }
            }
            if (j == i) {
                if (!(s > 0.0)) return false;
                L.values[k] = std::sqrt(s);
            } else {
                L.values[k] = s / L.values[L.row_ptr[j + 1] - 1];
            }
        }
    }
    return true;
}

}  // namespace

IcholResult ichol0(const SparseCSR& S, int max_retries) {
    if (S.n_rows != S.n_cols) throw std::invalid_argument("ichol0: matrix must be square");
    IcholResult res;
    if (try_ichol(S, 0.0, res.L)) return res;

    double max_diag = 0.0;
    for (int i = 0; i < S.n_rows; ++i) max_diag = std::max(max_diag, S.at(i, i));
    double sigma = 1e-3 * max_diag;
    for (int attempt = 1; attempt <= max_retries; ++attempt) {
        res.attempts = attempt + 1;
        if (sigma > 0.0 && try_ichol(S, sigma, res.L)) {
            res.shift = sigma;
            return res;
        }
        sigma *= 2.0;
    }
    throw NumericalError("ichol0: breakdown persists after diagonal shifts");
}

void ichol_solve(const SparseCSR& L, const Vector& b, Vector& x) {
    const int n = L.n_rows;
    x = b;
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        const int e = L.row_ptr[i + 1] - 1;  // diagonal is last in the sorted row
        for (int k = L.row_ptr[i]; k < e; ++k) s -= L.values[k] * x[L.col_idx[k]];
        x[i] = s / L.values[e];
    }
    for (int i = n - 1; i >= 0; --i) {
        const int e = L.row_ptr[i + 1] - 1;
        const double xi = x[i] / L.values[e];
        x[i] = xi;
        for (int k = L.row_ptr[i]; k < e; ++k) x[L.col_idx[k]] -= L.values[k] * xi;
    }
}

GNFactorization build_gn_factorization(const SparseCSR& H) {
    GNFactorization f;
    f.perm = amd_ordering(H);
    const int n = H.n_rows;
    f.active = 0;
    for (int i = 0; i < n; ++i)
        if (!H.row_empty(i)) ++f.active;

    std::vector<int> inv(n);
    for (int k = 0; k < n; ++k) inv[f.perm[k]] = k;

    // Active-block submatrix in the permuted ordering.
    std::vector<int> ri, ci;
    std::vector<double> vi;
    for (int a = 0; a < f.active; ++a) {
        const int r = f.perm[a];
        for (int k = H.row_ptr[r]; k < H.row_ptr[r + 1]; ++k) {
            ri.push_back(a);
            ci.push_back(inv[H.col_idx[k]]);
            vi.push_back(H.values[k]);
        }
    }
    SparseCSR sub = csr_from_triplets(f.active, f.active, ri, ci, vi);
    f.factor = ichol0(sub);
    return f;
}

void GNFactorization::solve(const Vector& rhs, Vector& x) const {
    const int n = static_cast<int>(perm.size());
    Vector pb(active), py;
    for (int a = 0; a < active; ++a) pb[a] = rhs[perm[a]];
    ichol_solve(factor.L, pb, py);
    x.assign(n, 0.0);
    for (int a = 0; a < active; ++a) x[perm[a]] = py[a];
}

CgResult cg_solve(const std::function<void(const Vector&, Vector&)>& op, const Vector& b,
                  Vector& x, double rel_tol, int max_iter) {
    const std::size_t n = b.size();
    x.assign(n, 0.0);
    CgResult res;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }

    Vector r = b;  // residual of x = 0
    Vector p = r;
    Vector ap(n);
    double rr = dot(r, r);
    const double tol = rel_tol * bnorm;
    while (res.iterations < max_iter) {
        if (std::sqrt(rr) <= tol) break;
        op(p, ap);
        const double pap = dot(p, ap);
        if (!std::isfinite(pap) || pap <= 0.0)
            throw NumericalError("cg_solve: operator not positive definite on search direction");
        const double alpha = rr / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        const double rr_new = dot(r, r);
        if (!std::isfinite(rr_new)) throw NumericalError("cg_solve: non-finite residual");
        const double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
        ++res.iterations;
    }
    res.relative_residual = std::sqrt(rr) / bnorm;
    res.converged = std::sqrt(rr) <= tol;
    return res;
}

}  // namespace bispect
