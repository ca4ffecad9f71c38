#ifndef FEMOPT_ORDERING_HPP
#define FEMOPT_ORDERING_HPP

// Approximate minimum degree ordering (Amestoy, Davis and Duff) on the
// quotient graph of A + A^T. The work arrays follow the classic layout:
// a node i is a variable while elen[i] >= 0 and becomes an element when it
// is eliminated (elen = -2); absorbed variables and elements store the index
// of their absorber as flip(j) = -j - 2 in cp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "femopt/sparse.hpp"

namespace femopt {

namespace detail {

inline constexpr std::int64_t flip(std::int64_t i) { return -i - 2; }

inline std::int64_t wclear(std::int64_t mark, std::int64_t lemax, std::vector<std::int64_t>& w, std::int64_t n) {
    if (mark < 2 || mark + lemax < 0) {
        for (std::int64_t k = 0; k < n; ++k)
            if (w[static_cast<std::size_t>(k)] != 0) w[static_cast<std::size_t>(k)] = 1;
        mark = 2;
    }
    return mark;
}

/// Depth-first postorder of the tree rooted at j; children lists in head/next.
inline std::int64_t tree_dfs(std::int64_t j, std::int64_t k, std::vector<std::int64_t>& head,
                             const std::vector<std::int64_t>& next, std::vector<std::int64_t>& post,
                             std::vector<std::int64_t>& stack) {
    std::int64_t top = 0;
    stack[0] = j;
    while (top >= 0) {
        const std::int64_t p = stack[static_cast<std::size_t>(top)];
        const std::int64_t i = head[static_cast<std::size_t>(p)];
        if (i == -1) {
            --top;
            post[static_cast<std::size_t>(k++)] = p;
        } else {
            head[static_cast<std::size_t>(p)] = next[static_cast<std::size_t>(i)];
            stack[static_cast<std::size_t>(++top)] = i;
        }
    }
    return k;
}

} // namespace detail

/// Fill-reducing permutation: perm[k] is the original index of the k-th pivot.
inline std::vector<int> amd_order(const SparseMatrix& a) {
    using detail::flip;
    using I = std::int64_t;
    const I n = a.n;
    std::vector<int> result(static_cast<std::size_t>(n));
    if (n == 0) return result;

    // Pattern of A + A^T without the diagonal, column-compressed.
    std::vector<I> cp(static_cast<std::size_t>(n) + 1, 0);
    {
        std::vector<I> cnt(static_cast<std::size_t>(n), 0);
        for (I i = 0; i < n; ++i)
            for (I k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const I j = a.col[static_cast<std::size_t>(k)];
                if (j == i) continue;
                ++cnt[static_cast<std::size_t>(i)];
                ++cnt[static_cast<std::size_t>(j)];
            }
        for (I i = 0; i < n; ++i) cp[static_cast<std::size_t>(i) + 1] = cp[static_cast<std::size_t>(i)] + cnt[static_cast<std::size_t>(i)];
    }
    std::vector<I> ci;
    {
        std::vector<I> tmp(static_cast<std::size_t>(cp[static_cast<std::size_t>(n)]));
        std::vector<I> pos(cp.begin(), cp.end() - 1);
        for (I i = 0; i < n; ++i)
            for (I k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const I j = a.col[static_cast<std::size_t>(k)];
                if (j == i) continue;
                tmp[static_cast<std::size_t>(pos[static_cast<std::size_t>(j)]++)] = i;
                tmp[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)]++)] = j;
            }
        // Sort and deduplicate each column.
        std::vector<I> np(static_cast<std::size_t>(n) + 1, 0);
        I q = 0;
        for (I j = 0; j < n; ++j) {
            auto b = tmp.begin() + cp[static_cast<std::size_t>(j)];
            auto e = tmp.begin() + cp[static_cast<std::size_t>(j) + 1];
            std::sort(b, e);
            e = std::unique(b, e);
            np[static_cast<std::size_t>(j)] = q;
            for (auto it = b; it != e; ++it) tmp[static_cast<std::size_t>(q++)] = *it;
        }
        np[static_cast<std::size_t>(n)] = q;
        cp = std::move(np);
        tmp.resize(static_cast<std::size_t>(q));
        ci = std::move(tmp);
    }

    const I cnz = cp[static_cast<std::size_t>(n)];
    I dense = std::max<I>(16, static_cast<I>(10.0 * std::sqrt(static_cast<double>(n))));
    dense = std::min<I>(n - 2, dense);
    const I nzmax = cnz + cnz / 5 + 2 * n;
    ci.resize(static_cast<std::size_t>(std::max<I>(nzmax, 1)));

    const auto N1 = static_cast<std::size_t>(n) + 1;
    std::vector<I> len(N1), nv(N1), next(N1), head(N1), elen(N1), degree(N1), w(N1), hhead(N1), last(N1);
    auto at = [](std::vector<I>& v, I i) -> I& { return v[static_cast<std::size_t>(i)]; };

    for (I k = 0; k < n; ++k) at(len, k) = at(cp, k + 1) - at(cp, k);
    at(len, n) = 0;
    for (I i = 0; i <= n; ++i) {
        at(head, i) = -1;
        at(last, i) = -1;
        at(next, i) = -1;
        at(hhead, i) = -1;
        at(nv, i) = 1;
        at(w, i) = 1;
        at(elen, i) = 0;
        at(degree, i) = at(len, i);
    }
    I mark = detail::wclear(0, 0, w, n);
    at(elen, n) = -2;
    at(cp, n) = -1;
    at(w, n) = 0;

    I nel = 0;
    for (I i = 0; i < n; ++i) {
        const I d = at(degree, i);
        if (d == 0) {
            at(elen, i) = -2;
            ++nel;
            at(cp, i) = -1;
            at(w, i) = 0;
        } else if (d > dense) {
            at(nv, i) = 0;
            at(elen, i) = -1;
            ++nel;
            at(cp, i) = flip(n);
            ++at(nv, n);
        } else {
            if (at(head, d) != -1) at(last, at(head, d)) = i;
            at(next, i) = at(head, d);
            at(head, d) = i;
        }
    }

    I mindeg = 0, lemax = 0, cnz_used = cnz;
    while (nel < n) {
        // Pivot of minimum approximate degree.
        I k = -1;
        for (; mindeg < n && (k = at(head, mindeg)) == -1; ++mindeg) {
        }
        if (at(next, k) != -1) at(last, at(next, k)) = -1;
        at(head, mindeg) = at(next, k);
        const I elenk = at(elen, k);
        I nvk = at(nv, k);
        nel += nvk;

        // Compact ci when the new element might not fit.
        if (elenk > 0 && cnz_used + mindeg >= nzmax) {
            for (I j = 0; j < n; ++j) {
                const I p = at(cp, j);
                if (p >= 0) {
                    at(cp, j) = at(ci, p);
                    at(ci, p) = flip(j);
                }
            }
            I q = 0;
            for (I p = 0; p < cnz_used;) {
                const I j = flip(at(ci, p++));
                if (j >= 0) {
                    at(ci, q) = at(cp, j);
                    at(cp, j) = q++;
                    for (I k3 = 0; k3 < at(len, j) - 1; ++k3) at(ci, q++) = at(ci, p++);
                }
            }
            cnz_used = q;
        }

        // Construct the new element L_k.
        I dk = 0;
        at(nv, k) = -nvk;
        I p = at(cp, k);
        const I pk1 = (elenk == 0) ? p : cnz_used;
        I pk2 = pk1;
        for (I k1 = 1; k1 <= elenk + 1; ++k1) {
            I e, pj, ln;
            if (k1 > elenk) {
                e = k;
                pj = p;
                ln = at(len, k) - elenk;
            } else {
                e = at(ci, p++);
                pj = at(cp, e);
                ln = at(len, e);
            }
            for (I k2 = 1; k2 <= ln; ++k2) {
                const I i = at(ci, pj++);
                const I nvi = at(nv, i);
                if (nvi <= 0) continue;
                dk += nvi;
                at(nv, i) = -nvi;
                at(ci, pk2++) = i;
                if (at(next, i) != -1) at(last, at(next, i)) = at(last, i);
                if (at(last, i) != -1) at(next, at(last, i)) = at(next, i);
                else at(head, at(degree, i)) = at(next, i);
            }
            if (e != k) {
                at(cp, e) = flip(k);
                at(w, e) = 0;
            }
        }
        if (elenk != 0) cnz_used = pk2;
        at(degree, k) = dk;
        at(cp, k) = pk1;
        at(len, k) = pk2 - pk1;
        at(elen, k) = -2;

        // |Le \ Lk| for every element e adjacent to L_k.
        mark = detail::wclear(mark, lemax, w, n);
        for (I pk = pk1; pk < pk2; ++pk) {
            const I i = at(ci, pk);
            const I eln = at(elen, i);
            if (eln <= 0) continue;
            const I nvi = -at(nv, i);
            const I wnvi = mark - nvi;
            for (I q = at(cp, i); q <= at(cp, i) + eln - 1; ++q) {
                const I e = at(ci, q);
                if (at(w, e) >= mark) at(w, e) -= nvi;
                else if (at(w, e) != 0) at(w, e) = at(degree, e) + wnvi;
            }
        }

        // Approximate degrees of the variables in L_k.
        for (I pk = pk1; pk < pk2; ++pk) {
            const I i = at(ci, pk);
            const I p1 = at(cp, i);
            const I p2 = p1 + at(elen, i) - 1;
            I pn = p1;
            std::uint64_t h = 0;
            I d = 0;
            for (I q = p1; q <= p2; ++q) {
                const I e = at(ci, q);
                if (at(w, e) != 0) {
                    const I dext = at(w, e) - mark;
                    if (dext > 0) {
                        d += dext;
                        at(ci, pn++) = e;
                        h += static_cast<std::uint64_t>(e);
                    } else {
                        at(cp, e) = flip(k);  // aggressive absorption
                        at(w, e) = 0;
                    }
                }
            }
            at(elen, i) = pn - p1 + 1;
            const I p3 = pn;
            const I p4 = p1 + at(len, i);
            for (I q = p2 + 1; q < p4; ++q) {
                const I j = at(ci, q);
                const I nvj = at(nv, j);
                if (nvj <= 0) continue;
                d += nvj;
                at(ci, pn++) = j;
                h += static_cast<std::uint64_t>(j);
            }
            if (d == 0) {
                // Mass elimination: i is indistinguishable from k.
                at(cp, i) = flip(k);
                const I nvi = -at(nv, i);
                dk -= nvi;
                nvk += nvi;
                nel += nvi;
                at(nv, i) = 0;
                at(elen, i) = -1;
            } else {
                at(degree, i) = std::min(at(degree, i), d);
                at(ci, pn) = at(ci, p3);
                at(ci, p3) = at(ci, p1);
                at(ci, p1) = k;
                at(len, i) = pn - p1 + 1;
                const I hk = static_cast<I>(h % static_cast<std::uint64_t>(n));
                at(next, i) = at(hhead, hk);
                at(hhead, hk) = i;
                at(last, i) = hk;
            }
        }
        at(degree, k) = dk;
        lemax = std::max(lemax, dk);
        mark = detail::wclear(mark + lemax, lemax, w, n);

        // Supervariable detection by hash buckets.
        for (I pk = pk1; pk < pk2; ++pk) {
            I i = at(ci, pk);
            if (at(nv, i) >= 0) continue;
            const I hk = at(last, i);
            i = at(hhead, hk);
            at(hhead, hk) = -1;
            for (; i != -1 && at(next, i) != -1; i = at(next, i), ++mark) {
                const I ln = at(len, i);
                const I eln = at(elen, i);
                for (I q = at(cp, i) + 1; q <= at(cp, i) + ln - 1; ++q) at(w, at(ci, q)) = mark;
                I jlast = i;
                for (I j = at(next, i); j != -1;) {
                    bool ok = at(len, j) == ln && at(elen, j) == eln;
                    for (I q = at(cp, j) + 1; ok && q <= at(cp, j) + ln - 1; ++q)
                        if (at(w, at(ci, q)) != mark) ok = false;
                    if (ok) {
                        at(cp, j) = flip(i);
                        at(nv, i) += at(nv, j);
                        at(nv, j) = 0;
                        at(elen, j) = -1;
                        j = at(next, j);
                        at(next, jlast) = j;
                    } else {
                        jlast = j;
                        j = at(next, j);
                    }
                }
            }
        }

        // Finalize L_k and put its variables back into the degree lists.
        I pout = pk1;
        for (I pk = pk1; pk < pk2; ++pk) {
            const I i = at(ci, pk);
            const I nvi = -at(nv, i);
            if (nvi <= 0) continue;
            at(nv, i) = nvi;
            I d = at(degree, i) + dk - nvi;
            d = std::min(d, n - nel - nvi);
            if (at(head, d) != -1) at(last, at(head, d)) = i;
            at(next, i) = at(head, d);
            at(last, i) = -1;
            at(head, d) = i;
            mindeg = std::min(mindeg, d);
            at(degree, i) = d;
            at(ci, pout++) = i;
        }
        at(nv, k) = nvk;
        at(len, k) = pout - pk1;
        if (at(len, k) == 0) {
            at(cp, k) = -1;
            at(w, k) = 0;
        }
        if (elenk != 0) cnz_used = pout;
    }

    // Postorder the assembly tree.
    for (I i = 0; i < n; ++i) at(cp, i) = flip(at(cp, i));
    for (I j = 0; j <= n; ++j) at(head, j) = -1;
    for (I j = n; j >= 0; --j) {
        if (at(nv, j) > 0) continue;
        at(next, j) = at(head, at(cp, j));
        at(head, at(cp, j)) = j;
    }
    for (I e = n; e >= 0; --e) {
        if (at(nv, e) <= 0) continue;
        if (at(cp, e) != -1) {
            at(next, e) = at(head, at(cp, e));
            at(head, at(cp, e)) = e;
        }
    }
    std::vector<I> post(N1);
    I k = 0;
    for (I i = 0; i <= n; ++i)
        if (at(cp, i) == -1) k = detail::tree_dfs(i, k, head, next, post, w);

    I out = 0;
    for (I t = 0; t < k; ++t)
        if (post[static_cast<std::size_t>(t)] < n) result[static_cast<std::size_t>(out++)] = static_cast<int>(post[static_cast<std::size_t>(t)]);
    if (out != n) throw Error("minimum degree ordering failed to order every node");
    return result;
}

/// Permutation is valid when it is a bijection of 0..n-1.
inline bool is_permutation(const std::vector<int>& perm) {
    std::vector<char> seen(perm.size(), 0);
    for (int p : perm) {
        if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || seen[static_cast<std::size_t>(p)]) return false;
        seen[static_cast<std::size_t>(p)] = 1;
    }
    return true;
}

} // namespace femopt

#endif
