#ifndef FEMOPT_PREDICTOR_HPP
#define FEMOPT_PREDICTOR_HPP

// Prediction of the optimal DoF count N_opt and the smallest reachable error
// E_min: normalization, round-off parameterization on a manufactured
// solution (MS+), prediction from the asymptotic truncation branch, a single
// post-processing solve, and the brute-force sweep it is compared with.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "femopt/analysis.hpp"
#include "femopt/error.hpp"
#include "femopt/expr.hpp"
#include "femopt/fem.hpp"
#include "femopt/mesh.hpp"
#include "femopt/problem.hpp"
#include "femopt/solver.hpp"

namespace femopt {

struct AlgoConfig {
    std::optional<int> r_min_override;
    std::int64_t n_max = 100'000'000;
    double c_s = 0.1;
    std::optional<double> c_r_override;
    /// Degree used by the normalization step.
    int normalization_degree = 2;
    /// MS+ levels are r_min(p) + msplus_offset ... + msplus_levels - 1.
    int msplus_offset = -1;
    int msplus_levels = 4;
    SolverOptions solver;

    int r_min(int p, int dim) const {
        if (r_min_override) return *r_min_override;
        if (dim == 1) return p < 6 ? 9 - p : 4;
        return std::max(2, 5 - p);
    }
    double c_r(int p) const {
        if (c_r_override) return *c_r_override;
        if (p < 4) return 0.9;
        if (p < 10) return 0.7;
        return 0.5;
    }
};

/// Everything needed to solve the problem at one (level, degree).
struct Experiment {
    ProblemSpec problem;
    ElementKind kind = ElementKind::Interval;
    DistortionSpec distortion;
    ReferenceMode mode = ReferenceMode::Exact;
    AlgoConfig algo;

    int dim() const { return problem.dim; }
};

struct LevelSolution {
    int level = 0;
    std::shared_ptr<const FeSpace> space;
    std::vector<double> U;
};

inline LevelSolution solve_level(const Experiment& ex, int level, int p) {
    auto mesh = std::make_shared<const Mesh>(build_mesh(ex.dim(), ex.kind, level, ex.distortion));
    auto space = std::make_shared<const FeSpace>(mesh, p);
    if (space->n_dofs() > ex.algo.n_max)
        throw CapacityError("level " + std::to_string(level) + " exceeds N_max");
    const AssembledSystem sys = assemble(*space, ex.problem);
    LevelSolution out;
    out.level = level;
    out.space = space;
    out.U = solve(sys.A, sys.F, ex.algo.solver);
    return out;
}

struct LevelMeasurement {
    int level = 0;
    std::int64_t n = 0;
    /// Indexed by Variable; NaN when not requested.
    std::array<double, 3> error{std::nan(""), std::nan(""), std::nan("")};
    double norm = std::nan("");
    double seconds = 0.0;
};

/// Solves successive levels of one experiment at fixed degree, timing each
/// measurement. In half-grid mode the finer solution is kept for reuse by the
/// next level.
class Sweeper {
public:
    Sweeper(const Experiment& ex, int p) : ex_(ex), p_(p) {
        if (ex.mode == ReferenceMode::Exact && !ex.problem.exact)
            throw AnalysisError("exact reference requested but the problem has no exact solution");
    }

    int degree() const { return p_; }

    LevelMeasurement measure(int level, std::span<const Variable> vars, bool want_norm = false) {
        const auto t0 = std::chrono::steady_clock::now();
        LevelMeasurement m;
        m.level = level;
        LevelSolution coarse = take(level);
        m.n = coarse.space->n_dofs();
        if (ex_.mode == ReferenceMode::Exact) {
            for (Variable v : vars)
                m.error[static_cast<std::size_t>(v)] =
                    l2_error(*coarse.space, coarse.U, *ex_.problem.exact, derivative_order(v));
        } else if (!vars.empty()) {
            LevelSolution fine = solve_level(ex_, level + 1, p_);
            for (Variable v : vars)
                m.error[static_cast<std::size_t>(v)] =
                    l2_error_half(*coarse.space, coarse.U, *fine.space, fine.U, derivative_order(v));
            cached_ = std::move(fine);
        }
        if (want_norm) m.norm = l2_norm(*coarse.space, coarse.U);
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return m;
    }

private:
    LevelSolution take(int level) {
        if (cached_ && cached_->level == level) {
            LevelSolution s = std::move(*cached_);
            cached_.reset();
            return s;
        }
        return solve_level(ex_, level, p_);
    }

    const Experiment& ex_;
    int p_;
    std::optional<LevelSolution> cached_;
};

inline std::int64_t level_dofs(const Experiment& ex, int level, int p) { return count_dofs(ex.kind, level, p); }

// ---------------------------------------------------------------- normalization

struct NormalizationResult {
    double norm = 0.0;
    int level = 0;
    bool converged = false;
    std::vector<double> history;
    double seconds = 0.0;
};

/// Refines at p = normalization_degree until successive ||u_h|| differ by
/// less than c_s relatively. Without convergence the last iterate is
/// returned with converged = false.
inline NormalizationResult normalization(const Experiment& ex, int start_level = 0) {
    const int p = ex.algo.normalization_degree;
    Experiment local = ex;
    local.mode = ReferenceMode::Exact;
    if (!local.problem.exact) local.problem.exact.emplace(Expr(0.0));
    Sweeper sweep(local, p);
    NormalizationResult out;
    int level = start_level;
    const std::vector<Variable> none;
    while (level_dofs(ex, level, p) < ex.algo.n_max) {
        LevelMeasurement m;
        try {
            m = sweep.measure(level, none, true);
        } catch (const CapacityError&) {
            break;
        }
        out.seconds += m.seconds;
        out.history.push_back(m.norm);
        out.level = level;
        out.norm = m.norm;
        const std::size_t k = out.history.size();
        if (k >= 2) {
            const double prev = out.history[k - 2];
            if (std::fabs((m.norm - prev) / prev) < ex.algo.c_s) {
                out.converged = true;
                break;
            }
        }
        ++level;
    }
    if (out.history.empty()) throw PredictionError("normalization could not solve any level below N_max");
    return out;
}

// ------------------------------------------------------------------ MS+

inline Expr default_manufactured_solution(int dim, int p) {
    if (p == 1) return dim == 1 ? parse("x-0.5") : parse("(x-0.5)+(y-0.5)");
    return dim == 1 ? parse("(x-0.5)^2") : parse("(x-0.5)^2+(x-0.5)*(y-0.5)+(y-0.5)^2");
}

struct MsPlusResult {
    Variable variable = Variable::U;
    double alpha_R_M = 0.0;
    double beta_R_M = 0.0;
    double residual = 0.0;
    double norm_uO = 0.0;
    double norm_uM = 0.0;
    double alpha_R_Mplus = 0.0;
    ErrorSeries series;

    double line(double n) const { return alpha_R_Mplus * std::pow(n, beta_R_M); }
};

inline double adjust_offset(double alpha_R_M, double norm_uO, double norm_uM) {
    if (!(norm_uM > 0.0)) throw PredictionError("manufactured solution has zero norm");
    return alpha_R_M * norm_uO / norm_uM;
}

struct Parameterization {
    int p = 0;
    Expr u_M;
    std::vector<MsPlusResult> results;
    double seconds = 0.0;

    const MsPlusResult& get(Variable v) const {
        for (const auto& r : results)
            if (r.variable == v) return r;
        throw PredictionError("no MS+ parameters for variable " + std::string(to_string(v)));
    }
};

/// Solves the manufactured problem (same domain, D, r and boundary types)
/// over a window of levels and fits the round-off line of every variable.
inline Parameterization parameterize_msplus(const Experiment& ex, const Expr& u_M, int p,
                                            std::span<const Variable> vars, double norm_uO,
                                            std::optional<int> first_level = std::nullopt, int n_levels = 0) {
    const auto deg = polynomial_degree(u_M);
    if (!deg) throw PredictionError("manufactured solution must be a polynomial");
    if (*deg > p) throw PredictionError("manufactured solution of degree " + std::to_string(*deg) +
                                        " is not representable at p = " + std::to_string(p));
    Experiment man = ex;
    man.problem = ex.problem.with_solution(u_M);
    man.mode = ReferenceMode::Exact;
    Sweeper sweep(man, p);
    const int r0 = first_level ? *first_level : std::max(0, ex.algo.r_min(p, ex.dim()) + ex.algo.msplus_offset);
    const int count = n_levels > 0 ? n_levels : ex.algo.msplus_levels;

    Parameterization out;
    out.p = p;
    out.u_M = u_M;
    std::vector<ErrorSeries> series(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) series[i].variable = vars[i];
    double norm_uM = 0.0;
    for (int level = r0; level < r0 + count; ++level) {
        if (level_dofs(ex, level, p) > ex.algo.n_max) break;
        const LevelMeasurement m = sweep.measure(level, vars, true);
        out.seconds += m.seconds;
        norm_uM = m.norm;
        for (std::size_t i = 0; i < vars.size(); ++i)
            series[i].add({level, m.n, m.error[static_cast<std::size_t>(vars[i])], m.seconds});
    }
    for (std::size_t i = 0; i < vars.size(); ++i) {
        std::size_t usable = 0;
        for (const auto& s : series[i].samples) usable += s.error > 0.0;
        if (usable < 3)
            throw PredictionError("MS+ for " + std::string(to_string(vars[i])) + " has " + std::to_string(usable) +
                                  " usable samples, need 3");
        const PowerLawFit fit = fit_powerlaw(series[i].samples);
        MsPlusResult r;
        r.variable = vars[i];
        r.alpha_R_M = fit.alpha;
        r.beta_R_M = fit.beta;
        r.residual = fit.residual;
        r.norm_uO = norm_uO;
        r.norm_uM = norm_uM;
        r.alpha_R_Mplus = adjust_offset(fit.alpha, norm_uO, norm_uM);
        r.series = std::move(series[i]);
        out.results.push_back(std::move(r));
    }
    return out;
}

// ------------------------------------------------------------- prediction

struct Optimum {
    double n_opt;
    double e_min;
};

/// Minimum of alpha_T N^-beta_T + alpha_R N^beta_R.
inline Optimum optimum(double alpha_T, double beta_T, double alpha_R, double beta_R) {
    if (!(alpha_T > 0.0) || !(alpha_R > 0.0) || !(beta_T > 0.0) || !(beta_R > 0.0))
        throw PredictionError("error-model coefficients must be positive");
    const double n = std::pow(alpha_T * beta_T / (alpha_R * beta_R), 1.0 / (beta_T + beta_R));
    return {n, alpha_T * std::pow(n, -beta_T) + alpha_R * std::pow(n, beta_R)};
}

/// Level whose DoF count is closest to n on a log scale, among levels not
/// above n_max.
inline int realizable_level(ElementKind kind, int p, double n, std::int64_t n_max) {
    int best = 0;
    double best_d = std::fabs(std::log(static_cast<double>(count_dofs(kind, 0, p))) - std::log(n));
    for (int r = 1; r <= 30; ++r) {
        const std::int64_t m = count_dofs(kind, r, p);
        if (m > n_max) break;
        const double d = std::fabs(std::log(static_cast<double>(m)) - std::log(n));
        if (d < best_d) {
            best = r;
            best_d = d;
        }
    }
    return best;
}

struct Prediction {
    Variable variable = Variable::U;
    int p = 0;
    double alpha_T = 0.0, beta_T = 0.0, alpha_R = 0.0, beta_R = 0.0;
    double n_opt = 0.0, e_min = 0.0;
    bool achievable = false;
    /// Realizable refinement level nearest to n_opt and its DoF count.
    int level = 0;
    std::int64_t level_n = 0;
    int anchor_level = 0;
    std::int64_t n_c = 0;
    double e_c = 0.0;
    ErrorSeries series;
    double seconds = 0.0;
};

inline Prediction make_prediction(Variable v, int p, double alpha_T, double beta_T, double alpha_R, double beta_R,
                                  ElementKind kind, std::int64_t n_max) {
    Prediction out;
    out.variable = v;
    out.p = p;
    out.alpha_T = alpha_T;
    out.beta_T = beta_T;
    out.alpha_R = alpha_R;
    out.beta_R = beta_R;
    const Optimum o = optimum(alpha_T, beta_T, alpha_R, beta_R);
    out.n_opt = o.n_opt;
    out.e_min = o.e_min;
    out.achievable = o.n_opt <= static_cast<double>(n_max);
    out.level = realizable_level(kind, p, o.n_opt, n_max);
    out.level_n = count_dofs(kind, out.level, p);
    return out;
}

/// Refines from r_min - 1 while N < N_max and E_h stays above the round-off
/// line; anchors the truncation line at the first level whose h-based order
/// reaches q * c_r.
inline Prediction predict(const Experiment& ex, Variable v, int p, const MsPlusResult& ms) {
    const int dim = ex.dim();
    const ExpectedOrder eo = expected_q(p, derivative_order(v), dim);
    const double target = eo.q * ex.algo.c_r(p);
    const double alpha_R = ms.alpha_R_Mplus, beta_R = ms.beta_R_M;
    if (!(beta_R > 0.0)) throw PredictionError("round-off slope must be positive, got " + std::to_string(beta_R));
    Sweeper sweep(ex, p);
    ErrorSeries series;
    series.variable = v;
    series.mode = ex.mode;
    double seconds = 0.0;
    const Variable vars[1] = {v};
    int level = std::max(0, ex.algo.r_min(p, dim) - 1);
    std::string why = "N_max reached";
    while (level_dofs(ex, level, p) < ex.algo.n_max) {
        const LevelMeasurement m = sweep.measure(level, vars);
        seconds += m.seconds;
        const double e = m.error[static_cast<std::size_t>(v)];
        series.add({level, m.n, e, m.seconds});
        const double e_r = alpha_R * std::pow(static_cast<double>(m.n), beta_R);
        if (!(e > e_r)) {
            why = "error reached the round-off line";
            break;
        }
        if (series.size() >= 2) {
            const double prev = series.samples[series.size() - 2].error;
            if (prev > 0.0 && convergence_order(prev, e) >= target) {
                const double alpha_T = alpha_T_from_anchor(e, static_cast<double>(m.n), eo.beta_T);
                Prediction out = make_prediction(v, p, alpha_T, eo.beta_T, alpha_R, beta_R, ex.kind, ex.algo.n_max);
                out.anchor_level = level;
                out.n_c = m.n;
                out.e_c = e;
                out.series = std::move(series);
                out.seconds = seconds;
                return out;
            }
        }
        ++level;
    }
    throw PredictionError("no asymptotic regime for " + std::string(to_string(v)) + " at p = " + std::to_string(p) +
                          ": " + why + " before q_h reached " + std::to_string(target));
}

struct PostprocessResult {
    int level = 0;
    std::int64_t n = 0;
    double error = 0.0;
    double seconds = 0.0;
};

/// One solve at the realizable level nearest N_opt.
inline PostprocessResult postprocess(const Experiment& ex, const Prediction& pred) {
    if (!pred.achievable)
        throw PredictionError("N_opt = " + std::to_string(pred.n_opt) + " is above N_max; nothing to solve");
    Sweeper sweep(ex, pred.p);
    const Variable vars[1] = {pred.variable};
    const LevelMeasurement m = sweep.measure(pred.level, vars);
    return {pred.level, m.n, m.error[static_cast<std::size_t>(pred.variable)], m.seconds};
}

// ------------------------------------------------------------ brute force

struct BruteForceResult {
    Variable variable = Variable::U;
    int p = 0;
    ErrorSeries series;
    int level_opt = 0;
    std::int64_t n_opt = 0;
    double e_min = 0.0;
    double seconds = 0.0;
    /// False when refinement stopped at the DoF or memory ceiling while the
    /// error was still decreasing.
    bool bracketed = false;
};

/// Refines from R = 0 until the error first increases, or a ceiling is hit.
inline BruteForceResult brute_force(const Experiment& ex, Variable v, int p, int start_level = 0) {
    Sweeper sweep(ex, p);
    BruteForceResult out;
    out.variable = v;
    out.p = p;
    out.series.variable = v;
    out.series.mode = ex.mode;
    const Variable vars[1] = {v};
    for (int level = start_level; level_dofs(ex, level, p) <= ex.algo.n_max; ++level) {
        LevelMeasurement m;
        try {
            m = sweep.measure(level, vars);
        } catch (const CapacityError&) {
            break;
        }
        const double e = m.error[static_cast<std::size_t>(v)];
        out.series.add({level, m.n, e, m.seconds});
        const std::size_t k = out.series.size();
        if (k >= 2 && e > out.series.samples[k - 2].error) {
            out.bracketed = true;
            break;
        }
    }
    if (out.series.empty()) throw PredictionError("brute force could not solve any level below N_max");
    const std::size_t best = out.series.argmin();
    out.level_opt = out.series.samples[best].level;
    out.n_opt = out.series.samples[best].n;
    out.e_min = out.series.samples[best].error;
    out.seconds = out.series.total_seconds();
    return out;
}

/// Percentage of the brute-force time saved.
inline double cpu_reduction(double t_bf, double t_pred) {
    if (!(t_bf > 0.0)) throw PredictionError("brute-force time must be positive");
    return (t_bf - t_pred) / t_bf * 100.0;
}

// --------------------------------------------------------------- PRED+

struct PredPlusResult {
    Prediction prediction;
    PostprocessResult post;
    double normalization_seconds = 0.0;
    double msplus_seconds = 0.0;

    double seconds() const { return normalization_seconds + msplus_seconds + prediction.seconds + post.seconds; }
};

inline PredPlusResult pred_plus(const Experiment& ex, Variable v, int p, const NormalizationResult& norm,
                                const Parameterization& par) {
    PredPlusResult out;
    out.normalization_seconds = norm.seconds;
    out.msplus_seconds = par.seconds;
    out.prediction = predict(ex, v, p, par.get(v));
    if (out.prediction.achievable) out.post = postprocess(ex, out.prediction);
    return out;
}

} // namespace femopt

#endif
