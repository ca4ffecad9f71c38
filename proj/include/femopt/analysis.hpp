#ifndef FEMOPT_ANALYSIS_HPP
#define FEMOPT_ANALYSIS_HPP

// L2 norms and errors of u_h and its derivatives, convergence orders and
// log-log power-law fits of error series.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "femopt/error.hpp"
#include "femopt/fem.hpp"
#include "femopt/problem.hpp"
#include "femopt/quadrature.hpp"

namespace femopt {

enum class Variable { U, Grad, Hess };

inline int derivative_order(Variable v) { return static_cast<int>(v); }

inline std::string_view to_string(Variable v) {
    switch (v) {
    case Variable::U: return "u";
    case Variable::Grad: return "grad";
    case Variable::Hess: return "hess";
    }
    return "?";
}

inline Variable parse_variable(std::string_view s) {
    if (s == "u") return Variable::U;
    if (s == "grad" || s == "ux") return Variable::Grad;
    if (s == "hess" || s == "uxx") return Variable::Hess;
    throw AnalysisError("unknown variable '" + std::string(s) + "'");
}

enum class ReferenceMode { Exact, HalfGrid };

struct ErrorSample {
    int level = 0;
    std::int64_t n = 0;
    double error = 0.0;
    double seconds = 0.0;
};

struct ErrorSeries {
    Variable variable = Variable::U;
    ReferenceMode mode = ReferenceMode::Exact;
    std::vector<ErrorSample> samples;

    void add(const ErrorSample& s) {
        if (!samples.empty() && s.n <= samples.back().n) throw AnalysisError("DoF counts must increase along a series");
        if (!(s.error >= 0.0) || !std::isfinite(s.error)) throw AnalysisError("error samples must be finite and non-negative");
        samples.push_back(s);
    }
    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
    double total_seconds() const {
        double t = 0.0;
        for (const auto& s : samples) t += s.seconds;
        return t;
    }
    /// Index of the smallest error.
    std::size_t argmin() const {
        if (samples.empty()) throw AnalysisError("empty series");
        std::size_t best = 0;
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (samples[i].error < samples[best].error) best = i;
        return best;
    }
};

struct PowerLawFit {
    double alpha = 0.0;
    double beta = 0.0;
    /// RMS misfit in decades.
    double residual = 0.0;
    int n_points = 0;

    double operator()(double n) const { return alpha * std::pow(n, beta); }
};

namespace detail {

// Neumaier compensated summation.
struct CompensatedSum {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v)) c += (sum - t) + v;
        else c += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

// Components of u_h (or a derivative) at a tabulated point.
inline void combine(const BasisTable& t, std::span<const int> dofs, std::span<const double> U, const AffineMap& map,
                    int k, int dim, double* out) {
    if (k == 0) {
        double s = 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i) s += U[static_cast<std::size_t>(dofs[i])] * t.values[i];
        out[0] = s;
        return;
    }
    if (k == 1) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const double c = U[static_cast<std::size_t>(dofs[i])];
            gx += c * t.grads[i][0];
            gy += c * t.grads[i][1];
        }
        const auto g = map.grad({gx, gy});
        out[0] = g[0];
        if (dim == 2) out[1] = g[1];
        return;
    }
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        const double c = U[static_cast<std::size_t>(dofs[i])];
        hxx += c * t.hessians[i][0];
        hxy += c * t.hessians[i][1];
        hyy += c * t.hessians[i][2];
    }
    const auto h = map.hessian({hxx, hxy, hyy});
    out[0] = h[0];
    if (dim == 2) {
        out[1] = h[1];
        out[2] = h[1];
        out[3] = h[2];
    }
}

inline int n_components(int k, int dim) {
    if (dim == 1) return 1;
    return k == 0 ? 1 : (k == 1 ? 2 : 4);
}

inline void check_order(const FeSpace& space, int k) {
    if (k < 0 || k > 2) throw AnalysisError("derivative order must be 0, 1 or 2");
    if (k == 2 && space.degree() < 2) throw AnalysisError("second-derivative error does not exist for p = 1");
}

} // namespace detail

/// L2 norm of u_h over the domain.
inline double l2_norm(const FeSpace& space, std::span<const double> U) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule rule = element_rule(mesh.kind, space.degree());
    const auto tabs = detail::tabulate_rule(space.element(), rule, 0);
    detail::CompensatedSum total;
    double v = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const AffineMap map = element_map(mesh, e);
        const auto dofs = space.dofs(e);
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            detail::combine(tabs[q], dofs, U, map, 0, mesh.dim, &v);
            local += rule.weights[q] * v * v;
        }
        total.add(local * map.det);
    }
    return std::sqrt(total.value());
}

/// L2 error of the k-th derivative of u_h against the exact solution; in 2D
/// the l2 combination of the per-component errors.
inline double l2_error(const FeSpace& space, std::span<const double> U, const ExactSolution& exact, int k) {
    detail::check_order(space, k);
    const Mesh& mesh = space.mesh();
    const int dim = mesh.dim;
    const auto comps = exact.components(k, dim);
    const QuadratureRule rule = element_rule(mesh.kind, space.degree());
    const auto tabs = detail::tabulate_rule(space.element(), rule, k);
    detail::CompensatedSum total;
    double vals[4];
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const AffineMap map = element_map(mesh, e);
        const auto dofs = space.dofs(e);
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            detail::combine(tabs[q], dofs, U, map, k, dim, vals);
            const Point x = map.to_physical(rule.points[q]);
            double s = 0.0;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                const double d = vals[c] - comps[c].eval(x);
                s += d * d;
            }
            local += rule.weights[q] * s;
        }
        total.add(local * map.det);
    }
    return std::sqrt(total.value());
}

/// L2 difference between u_h and the solution on the next finer mesh, the
/// latter evaluated at the quadrature points of the coarse mesh.
inline double l2_error_half(const FeSpace& coarse, std::span<const double> Uc, const FeSpace& fine,
                            std::span<const double> Uf, int k) {
    detail::check_order(coarse, k);
    const Mesh& mesh = coarse.mesh();
    const int dim = mesh.dim;
    const int nc = detail::n_components(k, dim);
    const QuadratureRule rule = element_rule(mesh.kind, coarse.degree());
    const auto tabs = detail::tabulate_rule(coarse.element(), rule, k);
    detail::CompensatedSum total;
    double vals[4];
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const AffineMap map = element_map(mesh, e);
        const auto dofs = coarse.dofs(e);
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            detail::combine(tabs[q], dofs, Uc, map, k, dim, vals);
            const Point x = map.to_physical(rule.points[q]);
            const auto ref = evaluate_in(fine, Uf, fine.mesh().locate(x), x, k);
            double s = 0.0;
            for (int c = 0; c < nc; ++c) {
                const double d = vals[c] - ref[static_cast<std::size_t>(c)];
                s += d * d;
            }
            local += rule.weights[q] * s;
        }
        total.add(local * map.det);
    }
    return std::sqrt(total.value());
}

/// q_h = log2(E_h / E_{h/2}).
inline double convergence_order(double e_h, double e_half) {
    if (!(e_h > 0.0) || !(e_half > 0.0)) throw AnalysisError("convergence order needs positive errors");
    return std::log2(e_h / e_half);
}

struct ExpectedOrder {
    double q;
    double beta_T;
};

/// Asymptotic order q = p + 1 - k and the slope in N, beta_T = q / dim.
inline ExpectedOrder expected_q(int p, int k, int dim) {
    if (p < 1 || k < 0 || k > 2 || k > p) throw AnalysisError("invalid degree / derivative order combination");
    if (dim != 1 && dim != 2) throw AnalysisError("dimension must be 1 or 2");
    const double q = p + 1 - k;
    return {q, dim == 1 ? q : q / 2.0};
}

/// Least-squares line through (log10 N, log10 E).
inline PowerLawFit fit_powerlaw(std::span<const double> n, std::span<const double> e) {
    if (n.size() != e.size()) throw AnalysisError("fit input sizes differ");
    if (n.size() < 2) throw AnalysisError("a power-law fit needs at least two points");
    const std::size_t m = n.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(n[i] > 0.0) || !(e[i] > 0.0)) throw AnalysisError("power-law fit needs positive values");
        lx[i] = std::log10(n[i]);
        ly[i] = std::log10(e[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw AnalysisError("power-law fit needs distinct N values");
    PowerLawFit fit;
    fit.beta = sxy / sxx;
    const double intercept = my - fit.beta * mx;
    fit.alpha = std::pow(10.0, intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (intercept + fit.beta * lx[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / static_cast<double>(m));
    fit.n_points = static_cast<int>(m);
    return fit;
}

/// Fit over the given samples, skipping exact zeros.
inline PowerLawFit fit_powerlaw(std::span<const ErrorSample> samples) {
    std::vector<double> n, e;
    for (const auto& s : samples)
        if (s.error > 0.0) {
            n.push_back(static_cast<double>(s.n));
            e.push_back(s.error);
        }
    return fit_powerlaw(n, e);
}

/// Samples strictly beyond the minimum-error point, as used for fitting the
/// round-off branch of an error series.
inline std::vector<ErrorSample> roundoff_window(const ErrorSeries& series, std::size_t min_points = 3) {
    const std::size_t best = series.argmin();
    std::vector<ErrorSample> out(series.samples.begin() + static_cast<std::ptrdiff_t>(best) + 1, series.samples.end());
    if (out.size() < min_points)
        throw AnalysisError("round-off branch has " + std::to_string(out.size()) + " samples, need " +
                            std::to_string(min_points));
    return out;
}

/// alpha_T = E_c * N_c^beta_T.
inline double alpha_T_from_anchor(double e_c, double n_c, double beta_T) {
    if (!(e_c > 0.0) || !(n_c > 0.0)) throw AnalysisError("anchor values must be positive");
    return e_c * std::pow(n_c, beta_T);
}

} // namespace femopt

#endif
