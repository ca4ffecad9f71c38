#ifndef FEMOPT_SPARSE_HPP
#define FEMOPT_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "femopt/error.hpp"

namespace femopt {

/// Square matrix in compressed sparse row format with sorted column indices.
struct SparseMatrix {
    int n = 0;
    std::vector<std::int64_t> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    std::int64_t nnz() const { return row_ptr.back(); }

    /// Builds from (row, col, value) triplets; duplicates are summed in input order.
    static SparseMatrix from_triplets(int n, std::span<const int> rows, std::span<const int> cols,
                                      std::span<const double> vals) {
        SparseMatrix m;
        m.n = n;
        m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int r : rows) ++m.row_ptr[static_cast<std::size_t>(r) + 1];
        for (int i = 0; i < n; ++i) m.row_ptr[static_cast<std::size_t>(i) + 1] += m.row_ptr[static_cast<std::size_t>(i)];
        std::vector<std::int64_t> next(m.row_ptr.begin(), m.row_ptr.end() - 1);
        std::vector<int> c(rows.size());
        std::vector<double> v(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto slot = static_cast<std::size_t>(next[static_cast<std::size_t>(rows[k])]++);
            c[slot] = cols[k];
            v[slot] = vals[k];
        }
        m.col.reserve(rows.size());
        m.val.reserve(rows.size());
        std::vector<std::int64_t> start(static_cast<std::size_t>(n) + 1, 0);
        std::vector<std::pair<int, std::size_t>> order;
        for (int i = 0; i < n; ++i) {
            const auto b = static_cast<std::size_t>(m.row_ptr[static_cast<std::size_t>(i)]);
            const auto e = static_cast<std::size_t>(m.row_ptr[static_cast<std::size_t>(i) + 1]);
            order.clear();
            for (std::size_t k = b; k < e; ++k) order.emplace_back(c[k], k);
            std::stable_sort(order.begin(), order.end(),
                             [](const auto& x, const auto& y) { return x.first < y.first; });
            start[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(m.col.size());
            for (const auto& [cc, k] : order) {
                if (!m.col.empty() && static_cast<std::int64_t>(m.col.size()) > start[static_cast<std::size_t>(i)] &&
                    m.col.back() == cc) {
                    m.val.back() += v[k];
                } else {
                    m.col.push_back(cc);
                    m.val.push_back(v[k]);
                }
            }
        }
        start[static_cast<std::size_t>(n)] = static_cast<std::int64_t>(m.col.size());
        m.row_ptr = std::move(start);
        return m;
    }

    static SparseMatrix identity(int n) {
        SparseMatrix m;
        m.n = n;
        m.row_ptr.resize(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) m.row_ptr[static_cast<std::size_t>(i)] = i;
        m.col.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) m.col[static_cast<std::size_t>(i)] = i;
        m.val.assign(static_cast<std::size_t>(n), 1.0);
        return m;
    }

    /// Entry (i, j), zero when not stored.
    double at(int i, int j) const {
        const auto b = col.begin() + row_ptr[static_cast<std::size_t>(i)];
        const auto e = col.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
        const auto it = std::lower_bound(b, e, j);
        if (it == e || *it != j) return 0.0;
        return val[static_cast<std::size_t>(it - col.begin())];
    }

    std::vector<double> multiply(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n) throw Error("dimension mismatch in matrix-vector product");
        std::vector<double> y(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
                s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
            y[static_cast<std::size_t>(i)] = s;
        }
        return y;
    }

    double norm_inf() const {
        double m = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
                s += std::fabs(val[static_cast<std::size_t>(k)]);
            m = std::max(m, s);
        }
        return m;
    }

    /// Largest |a_ij - a_ji| relative to max(|a_ij|, |a_ji|) over stored entries.
    double asymmetry() const {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const int j = col[static_cast<std::size_t>(k)];
                const double a = val[static_cast<std::size_t>(k)], b = at(j, i);
                const double s = std::max(std::fabs(a), std::fabs(b));
                if (s > 0.0) worst = std::max(worst, std::fabs(a - b) / s);
            }
        return worst;
    }
};

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

} // namespace femopt

#endif
