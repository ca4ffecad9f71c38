#ifndef FEMOPT_SOLVER_HPP
#define FEMOPT_SOLVER_HPP

// Direct sparse solver for the symmetric positive definite systems produced
// by assembly: approximate minimum degree ordering, elimination tree,
// symbolic row counts and an up-looking numeric Cholesky factorization
// P A P^T = L L^T. Everything runs single-threaded in a fixed order, so the
// same matrix and right-hand side always give bit-identical solutions.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/ordering.hpp"
#include "femopt/sparse.hpp"

namespace femopt {

enum class Ordering {
    /// Natural order for banded matrices, minimum degree otherwise.
    Automatic,
    MinimumDegree,
    Natural,
};

inline int bandwidth(const SparseMatrix& a) {
    int b = 0;
    for (int i = 0; i < a.n; ++i)
        for (auto k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
            b = std::max(b, std::abs(a.col[static_cast<std::size_t>(k)] - i));
    return b;
}

struct SolverOptions {
    /// DoF ceiling; larger systems are refused.
    std::int64_t max_dofs = 100'000'000;
    /// Ceiling on stored factor entries (about 12 bytes each).
    std::int64_t max_factor_entries = 150'000'000;
    /// Steps of iterative refinement after the direct solve. Off by default
    /// since it changes the round-off being measured.
    int refinement_steps = 0;
    Ordering ordering = Ordering::Automatic;
    /// Automatic ordering keeps the given order when the bandwidth is at most this.
    int banded_threshold = 16;
};

struct FactorStats {
    std::int64_t n = 0;
    std::int64_t nnz_a = 0;
    std::int64_t nnz_l = 0;
};

class Factorization {
public:
    const FactorStats& stats() const { return stats_; }
    const std::vector<int>& permutation() const { return perm_; }
    int size() const { return static_cast<int>(perm_.size()); }

    std::vector<double> solve(std::span<const double> b) const {
        const auto n = static_cast<std::size_t>(size());
        if (b.size() != n) throw Error("dimension mismatch: rhs has " + std::to_string(b.size()) +
                                       " entries, matrix has " + std::to_string(n));
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = b[static_cast<std::size_t>(perm_[k])];
        // L y = P b
        for (std::size_t j = 0; j < n; ++j) {
            const auto p0 = static_cast<std::size_t>(lp_[j]);
            const auto p1 = static_cast<std::size_t>(lp_[j + 1]);
            x[j] /= lx_[p0];
            const double xj = x[j];
            for (std::size_t p = p0 + 1; p < p1; ++p) x[static_cast<std::size_t>(li_[p])] -= lx_[p] * xj;
        }
        // L^T z = y
        for (std::size_t j = n; j-- > 0;) {
            const auto p0 = static_cast<std::size_t>(lp_[j]);
            const auto p1 = static_cast<std::size_t>(lp_[j + 1]);
            double s = x[j];
            for (std::size_t p = p0 + 1; p < p1; ++p) s -= lx_[p] * x[static_cast<std::size_t>(li_[p])];
            x[j] = s / lx_[p0];
        }
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k) out[static_cast<std::size_t>(perm_[k])] = x[k];
        return out;
    }

private:
    friend Factorization factorize(const SparseMatrix& a, const SolverOptions& opt);

    FactorStats stats_;
    std::vector<int> perm_;
    std::vector<std::int64_t> lp_;
    std::vector<int> li_;
    std::vector<double> lx_;
};

/// Throws SingularMatrixError on a non-positive pivot, CapacityError when a
/// ceiling in `opt` is exceeded.
inline Factorization factorize(const SparseMatrix& a, const SolverOptions& opt = {}) {
    const int n = a.n;
    if (static_cast<std::int64_t>(n) > opt.max_dofs)
        throw CapacityError("system with " + std::to_string(n) + " unknowns exceeds the DoF ceiling " +
                            std::to_string(opt.max_dofs));
    if (a.asymmetry() > 1e-12) throw Error("Cholesky factorization requires a symmetric matrix");

    Factorization f;
    f.stats_.n = n;
    f.stats_.nnz_a = a.nnz();
    const bool natural = opt.ordering == Ordering::Natural ||
                         (opt.ordering == Ordering::Automatic && bandwidth(a) <= opt.banded_threshold);
    if (!natural) {
        f.perm_ = amd_order(a);
    } else {
        f.perm_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) f.perm_[static_cast<std::size_t>(i)] = i;
    }
    const auto N = static_cast<std::size_t>(n);
    std::vector<int> pinv(N);
    for (std::size_t k = 0; k < N; ++k) pinv[static_cast<std::size_t>(f.perm_[k])] = static_cast<int>(k);

    // Upper triangle of C = P A P^T, column-compressed (row indices <= column).
    std::vector<std::int64_t> cp(N + 1, 0);
    for (int i = 0; i < n; ++i)
        for (auto k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const int j = a.col[static_cast<std::size_t>(k)];
            const int pi = pinv[static_cast<std::size_t>(i)], pj = pinv[static_cast<std::size_t>(j)];
            if (pi <= pj) ++cp[static_cast<std::size_t>(pj) + 1];
        }
    for (std::size_t j = 0; j < N; ++j) cp[j + 1] += cp[j];
    std::vector<int> ci(static_cast<std::size_t>(cp[N]));
    std::vector<double> cx(static_cast<std::size_t>(cp[N]));
    {
        std::vector<std::int64_t> pos(cp.begin(), cp.end() - 1);
        for (int i = 0; i < n; ++i)
            for (auto k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const int j = a.col[static_cast<std::size_t>(k)];
                const int pi = pinv[static_cast<std::size_t>(i)], pj = pinv[static_cast<std::size_t>(j)];
                if (pi <= pj) {
                    const auto slot = static_cast<std::size_t>(pos[static_cast<std::size_t>(pj)]++);
                    ci[slot] = pi;
                    cx[slot] = a.val[static_cast<std::size_t>(k)];
                }
            }
    }

    // Elimination tree with path compression.
    std::vector<int> parent(N, -1), ancestor(N, -1);
    for (std::size_t k = 0; k < N; ++k) {
        for (auto p = cp[k]; p < cp[k + 1]; ++p) {
            int i = ci[static_cast<std::size_t>(p)];
            while (i != -1 && i < static_cast<int>(k)) {
                const int inext = ancestor[static_cast<std::size_t>(i)];
                ancestor[static_cast<std::size_t>(i)] = static_cast<int>(k);
                if (inext == -1) parent[static_cast<std::size_t>(i)] = static_cast<int>(k);
                i = inext;
            }
        }
    }

    // Nonzero pattern of row k of L: reach of the entries of C(:,k) in the
    // elimination tree, returned in topological order in stack[top..n).
    std::vector<int> stack(N), flag(N, -1);
    auto ereach = [&](int k) {
        std::size_t top = N;
        flag[static_cast<std::size_t>(k)] = k;
        for (auto p = cp[static_cast<std::size_t>(k)]; p < cp[static_cast<std::size_t>(k) + 1]; ++p) {
            int i = ci[static_cast<std::size_t>(p)];
            if (i > k) continue;
            std::size_t len = 0;
            while (flag[static_cast<std::size_t>(i)] != k) {
                stack[len++] = i;
                flag[static_cast<std::size_t>(i)] = k;
                i = parent[static_cast<std::size_t>(i)];
            }
            while (len > 0) stack[--top] = stack[--len];
        }
        return top;
    };

    // Column counts.
    std::vector<std::int64_t> colcount(N, 1);
    for (int k = 0; k < n; ++k) {
        const std::size_t top = ereach(k);
        for (std::size_t t = top; t < N; ++t) ++colcount[static_cast<std::size_t>(stack[t])];
    }
    f.lp_.assign(N + 1, 0);
    for (std::size_t j = 0; j < N; ++j) f.lp_[j + 1] = f.lp_[j] + colcount[j];
    f.stats_.nnz_l = f.lp_[N];
    if (f.stats_.nnz_l > opt.max_factor_entries)
        throw CapacityError("Cholesky factor needs " + std::to_string(f.stats_.nnz_l) +
                            " entries, above the memory ceiling " + std::to_string(opt.max_factor_entries));
    f.li_.resize(static_cast<std::size_t>(f.stats_.nnz_l));
    f.lx_.resize(static_cast<std::size_t>(f.stats_.nnz_l));

    // Up-looking numeric factorization.
    std::vector<std::int64_t> next(f.lp_.begin(), f.lp_.end() - 1);
    std::vector<double> x(N, 0.0);
    std::fill(flag.begin(), flag.end(), -1);
    for (int k = 0; k < n; ++k) {
        const auto K = static_cast<std::size_t>(k);
        std::size_t top = ereach(k);
        for (auto p = cp[K]; p < cp[K + 1]; ++p) x[static_cast<std::size_t>(ci[static_cast<std::size_t>(p)])] = cx[static_cast<std::size_t>(p)];
        double d = x[K];
        x[K] = 0.0;
        for (; top < N; ++top) {
            const auto i = static_cast<std::size_t>(stack[top]);
            const double lki = x[i] / f.lx_[static_cast<std::size_t>(f.lp_[i])];
            x[i] = 0.0;
            for (auto p = f.lp_[i] + 1; p < next[i]; ++p)
                x[static_cast<std::size_t>(f.li_[static_cast<std::size_t>(p)])] -= f.lx_[static_cast<std::size_t>(p)] * lki;
            d -= lki * lki;
            const auto slot = static_cast<std::size_t>(next[i]++);
            f.li_[slot] = k;
            f.lx_[slot] = lki;
        }
        if (!(d > 0.0) || !std::isfinite(d))
            throw SingularMatrixError("matrix is singular or not positive definite at pivot " + std::to_string(k),
                                      static_cast<std::size_t>(f.perm_[K]));
        const auto slot = static_cast<std::size_t>(next[K]++);
        f.li_[slot] = k;
        f.lx_[slot] = std::sqrt(d);
    }
    return f;
}

/// Factorize and solve in one call, with optional iterative refinement.
inline std::vector<double> solve(const SparseMatrix& a, std::span<const double> b, const SolverOptions& opt = {}) {
    const Factorization f = factorize(a, opt);
    std::vector<double> x = f.solve(b);
    for (int step = 0; step < opt.refinement_steps; ++step) {
        std::vector<double> r = a.multiply(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        const std::vector<double> dx = f.solve(r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    }
    return x;
}

} // namespace femopt

#endif
