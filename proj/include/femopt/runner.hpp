#ifndef FEMOPT_RUNNER_HPP
#define FEMOPT_RUNNER_HPP

// Runs a configured experiment (brute force and/or PRED+ per degree and
// variable) and writes the CSV tables, report and gnuplot scripts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "femopt/config.hpp"
#include "femopt/predictor.hpp"

namespace femopt {

struct PipelineResult {
    Variable variable = Variable::U;
    int p = 0;
    std::optional<BruteForceResult> bf;
    std::optional<Prediction> prediction;
    std::optional<PostprocessResult> post;
    std::optional<MsPlusResult> msplus;
    /// Non-empty when the pipeline failed.
    std::string failure;

    /// Prediction refinements plus the post-processing solve.
    double pred_seconds() const {
        return (prediction ? prediction->seconds : 0.0) + (post ? post->seconds : 0.0);
    }
};

struct DegreeResult {
    int p = 0;
    double msplus_seconds = 0.0;
    std::vector<PipelineResult> pipelines;
};

struct RunResult {
    std::optional<NormalizationResult> normalization;
    std::vector<DegreeResult> degrees;
    bool parallel = false;

    bool failed() const {
        for (const auto& d : degrees)
            for (const auto& r : d.pipelines)
                if (!r.failure.empty()) return true;
        return false;
    }
    double bf_seconds() const {
        double t = 0.0;
        for (const auto& d : degrees)
            for (const auto& r : d.pipelines)
                if (r.bf) t += r.bf->seconds;
        return t;
    }
    /// Every PRED+ solve, with normalization and MS+ counted once.
    double pred_plus_seconds() const {
        double t = normalization ? normalization->seconds : 0.0;
        for (const auto& d : degrees) {
            t += d.msplus_seconds;
            for (const auto& r : d.pipelines) t += r.pred_seconds();
        }
        return t;
    }
};

namespace detail {

inline DegreeResult run_degree(const ExperimentConfig& cfg, int p, const NormalizationResult* norm) {
    const Experiment& ex = cfg.experiment;
    const auto vars = cfg.variables_for(p);
    DegreeResult out;
    out.p = p;
    for (Variable v : vars) {
        PipelineResult r;
        r.variable = v;
        r.p = p;
        out.pipelines.push_back(std::move(r));
    }
    auto fail_all = [&](const std::string& msg) {
        for (auto& r : out.pipelines)
            if (r.failure.empty()) r.failure = msg;
    };
    if (cfg.mode != RunMode::Predict) {
        for (auto& r : out.pipelines) {
            try {
                r.bf = brute_force(ex, r.variable, p);
            } catch (const Error& e) {
                r.failure = std::string("brute force: ") + e.what();
            }
        }
    }
    if (cfg.mode == RunMode::BruteForce) return out;
    if (!norm) {
        fail_all("predictor: normalization failed");
        return out;
    }
    std::optional<Parameterization> par;
    try {
        par = parameterize_msplus(ex, cfg.manufactured_solution(p), p, vars, norm->norm);
        out.msplus_seconds = par->seconds;
    } catch (const Error& e) {
        fail_all(std::string("MS+: ") + e.what());
        return out;
    }
    for (auto& r : out.pipelines) {
        r.msplus = par->get(r.variable);
        try {
            r.prediction = predict(ex, r.variable, p, *r.msplus);
            if (r.prediction->achievable) r.post = postprocess(ex, *r.prediction);
        } catch (const Error& e) {
            if (r.failure.empty()) r.failure = std::string("predictor: ") + e.what();
        }
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// One significant digit, the convention of tabulated offsets.
inline std::string fmt_alpha(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("error writing " + path.string());
}

} // namespace detail

/// R,N,E_h,q_h,seconds with q_h empty on the first row.
inline std::string series_csv(const ErrorSeries& s) {
    std::ostringstream os;
    os << "R,N,E_h,q_h,seconds\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const auto& x = s.samples[i];
        os << x.level << ',' << x.n << ',' << detail::fmt(x.error) << ',';
        if (i > 0 && x.error > 0.0 && s.samples[i - 1].error > 0.0)
            os << detail::fmt(convergence_order(s.samples[i - 1].error, x.error));
        os << ',' << detail::fmt(x.seconds) << '\n';
    }
    return os.str();
}

/// Log-log script for one variable across degrees: measured series, the two
/// model branches dashed and a marker at (N_opt, E_min).
inline std::string plot_script(Variable v, const std::vector<const PipelineResult*>& rows) {
    const std::string var(to_string(v));
    std::ostringstream os;
    os << "# gnuplot -p plot_" << var << ".gp\n"
       << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set format y '10^{%L}'\n"
       << "set xlabel 'N'\n"
       << "set ylabel 'E_h (" << var << ")'\n"
       << "set key outside right\n"
       << "set grid\n";
    std::vector<std::string> items;
    int style = 1;
    for (const PipelineResult* r : rows) {
        const std::string tag = var + "_p" + std::to_string(r->p);
        const std::string c = "lc " + std::to_string(style);
        if (r->bf || r->prediction)
            items.push_back("'series_" + tag + ".csv' every ::1 using 2:3 with linespoints pt 7 " + c + " title 'p=" +
                            std::to_string(r->p) + "'");
        if (r->msplus)
            items.push_back("'msplus_" + tag + ".csv' every ::1 using 2:3 with points pt 6 " + c + " title 'MS p=" +
                            std::to_string(r->p) + "'");
        if (r->prediction) {
            const Prediction& q = *r->prediction;
            items.push_back(detail::fmt(q.alpha_T) + "*x**(-" + detail::fmt(q.beta_T) + ") with lines dt 2 " + c +
                            " notitle");
            items.push_back(detail::fmt(q.alpha_R) + "*x**(" + detail::fmt(q.beta_R) + ") with lines dt 3 " + c +
                            " notitle");
            os << "$opt_" << r->p << " << EOD\n" << detail::fmt(q.n_opt) << ',' << detail::fmt(q.e_min) << "\nEOD\n";
            items.push_back("$opt_" + std::to_string(r->p) + " using 1:2 with points pt 5 ps 1.5 " + c + " notitle");
        }
        ++style;
    }
    if (items.empty()) {
        os << "# nothing to plot\n";
        return os.str();
    }
    os << "plot ";
    for (std::size_t i = 0; i < items.size(); ++i) os << (i ? ", \\\n     " : "") << items[i];
    os << '\n';
    return os.str();
}

inline std::string prediction_csv(const RunResult& run) {
    std::ostringstream os;
    os << "variable,p,alpha_T,beta_T,alpha_R,beta_R,N_opt,E_min,achievable,R_opt,N_realized,E_post\n";
    for (const auto& d : run.degrees)
        for (const auto& r : d.pipelines) {
            if (!r.prediction) continue;
            const Prediction& q = *r.prediction;
            os << to_string(r.variable) << ',' << r.p << ',' << detail::fmt(q.alpha_T) << ',' << detail::fmt(q.beta_T)
               << ',' << detail::fmt(q.alpha_R) << ',' << detail::fmt(q.beta_R) << ',' << detail::fmt(q.n_opt) << ','
               << detail::fmt(q.e_min) << ',' << (q.achievable ? "true" : "false") << ',' << q.level << ','
               << q.level_n << ',' << (r.post ? detail::fmt(r.post->error) : "") << '\n';
        }
    return os.str();
}

inline std::string report_text(const ExperimentConfig& cfg, const RunResult& run) {
    std::ostringstream os;
    const Experiment& ex = cfg.experiment;
    os << "femopt report\n"
       << "config: " << cfg.source << '\n'
       << "dim " << ex.dim() << ", elements " << to_string(ex.kind) << ", mesh type " << ex.distortion.mesh_type;
    if (ex.distortion.mesh_type == 2) os << " (f_h " << ex.distortion.magnitude << ", seed " << ex.distortion.seed << ')';
    os << "\nreference " << (ex.mode == ReferenceMode::Exact ? "exact" : "half-grid") << ", mode " << to_string(cfg.mode)
       << ", N_max " << ex.algo.n_max << "\n\n";
    if (run.normalization) {
        const auto& n = *run.normalization;
        os << "normalization: ||u||_2 = " << detail::fmt_short(n.norm) << " at R=" << n.level
           << (n.converged ? "" : " (not converged)") << ", " << detail::fmt_short(n.seconds) << " s\n\n";
    }
    const bool both = cfg.mode == RunMode::Both;
    for (const auto& d : run.degrees) {
        os << "p = " << d.p;
        if (cfg.mode != RunMode::BruteForce)
            os << "   (MS+ with u_M = " << to_string(cfg.manufactured_solution(d.p)) << ", "
               << detail::fmt_short(d.msplus_seconds) << " s)";
        os << '\n';
        for (const auto& r : d.pipelines) {
            os << "  " << to_string(r.variable) << '\n';
            if (r.bf) {
                os << "    BF     N_opt " << r.bf->n_opt << " (R=" << r.bf->level_opt << ")  E_min "
                   << detail::fmt_short(r.bf->e_min) << "  T " << detail::fmt_short(r.bf->seconds) << " s"
                   << (r.bf->bracketed ? "" : "  minimum not bracketed") << '\n';
            }
            if (r.msplus)
                os << "    MS+    alpha_R,M " << detail::fmt_alpha(r.msplus->alpha_R_M) << "  beta_R,M "
                   << detail::fmt_short(r.msplus->beta_R_M) << "  alpha_R,M+ " << detail::fmt_alpha(r.msplus->alpha_R_Mplus)
                   << "  (fit residual " << detail::fmt_short(r.msplus->residual) << ")\n";
            if (r.prediction) {
                const auto& q = *r.prediction;
                os << "    PRED   alpha_T " << detail::fmt_alpha(q.alpha_T) << "  beta_T " << q.beta_T << "  anchor R="
                   << q.anchor_level << "  N_opt " << detail::fmt_short(q.n_opt) << "  E_min "
                   << detail::fmt_short(q.e_min) << (q.achievable ? "" : "  not achievable") << '\n';
            }
            if (r.post)
                os << "    PRED+  solved at R=" << r.post->level << " N " << r.post->n << "  E "
                   << detail::fmt_short(r.post->error) << "  T (prediction + post) "
                   << detail::fmt_short(r.pred_seconds()) << " s\n";
            if (both && r.bf && r.post && !run.parallel) {
                const double shared = (run.normalization ? run.normalization->seconds : 0.0) + d.msplus_seconds;
                os << "    pct    " << detail::fmt_short(cpu_reduction(r.bf->seconds, r.pred_seconds() + shared))
                   << " (standalone, normalization and MS+ charged in full)\n";
            }
            if (!r.failure.empty()) os << "    FAILED " << r.failure << '\n';
        }
    }
    if (both) {
        os << "\ntotals\n"
           << "  T_BF    " << detail::fmt_short(run.bf_seconds()) << " s\n"
           << "  T_PRED+ " << detail::fmt_short(run.pred_plus_seconds()) << " s\n";
        if (run.parallel) os << "  pct     not reported for --parallel runs\n";
        else if (run.bf_seconds() > 0.0)
            os << "  pct     " << detail::fmt_short(cpu_reduction(run.bf_seconds(), run.pred_plus_seconds())) << '\n';
    }
    return os.str();
}

/// Runs all pipelines; with `parallel` one task per degree.
inline RunResult run_experiment(const ExperimentConfig& cfg, bool parallel = false) {
    RunResult run;
    run.parallel = parallel;
    const NormalizationResult* norm = nullptr;
    std::string norm_failure;
    if (cfg.mode != RunMode::BruteForce) {
        try {
            run.normalization = normalization(cfg.experiment);
            norm = &*run.normalization;
        } catch (const Error& e) {
            norm_failure = std::string("predictor: normalization: ") + e.what();
        }
    }
    if (parallel) {
        std::vector<std::future<DegreeResult>> tasks;
        for (int p : cfg.degrees)
            tasks.push_back(std::async(std::launch::async, [&cfg, p, norm] { return detail::run_degree(cfg, p, norm); }));
        for (auto& t : tasks) run.degrees.push_back(t.get());
    } else {
        for (int p : cfg.degrees) run.degrees.push_back(detail::run_degree(cfg, p, norm));
    }
    if (!norm_failure.empty())
        for (auto& d : run.degrees)
            for (auto& r : d.pipelines)
                if (r.failure == "predictor: normalization failed") r.failure = norm_failure;
    return run;
}

/// Writes every artifact of a run into `dir`.
inline void write_outputs(const ExperimentConfig& cfg, const RunResult& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::map<Variable, std::vector<const PipelineResult*>> by_var;
    for (const auto& d : run.degrees)
        for (const auto& r : d.pipelines) {
            const std::string tag = std::string(to_string(r.variable)) + "_p" + std::to_string(r.p);
            if (r.bf) detail::write_file(dir / ("series_" + tag + ".csv"), series_csv(r.bf->series));
            else if (r.prediction) detail::write_file(dir / ("series_" + tag + ".csv"), series_csv(r.prediction->series));
            if (r.msplus) detail::write_file(dir / ("msplus_" + tag + ".csv"), series_csv(r.msplus->series));
            by_var[r.variable].push_back(&r);
        }
    if (cfg.mode != RunMode::BruteForce) detail::write_file(dir / "prediction.csv", prediction_csv(run));
    detail::write_file(dir / "report.txt", report_text(cfg, run));
    if (cfg.emit_plots)
        for (const auto& [v, rows] : by_var) detail::write_file(dir / ("plot_" + std::string(to_string(v)) + ".gp"), plot_script(v, rows));
}

} // namespace femopt

#endif
