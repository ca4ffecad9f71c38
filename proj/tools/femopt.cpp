// femopt: run, inspect and validate optimal-DoF experiments.
//
//   femopt run <config> [--parallel] [--out DIR]
//   femopt dofs <kind> <R> <p>
//   femopt check <config>
//
// Exit codes: 0 ok, 1 runtime failure, 2 config error.
// FEMOPT_SEED overrides the mesh distortion seed.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "femopt/config.hpp"
#include "femopt/mesh.hpp"
#include "femopt/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;

femopt::ExperimentConfig load(const std::string& path) {
    femopt::ExperimentConfig cfg = femopt::load_config(path);
    if (const char* s = std::getenv("FEMOPT_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s, &end, 10);
        if (!*s || *end) throw femopt::ConfigError("FEMOPT_SEED: not an unsigned integer: '" + std::string(s) + "'");
        cfg.experiment.distortion.seed = static_cast<std::uint64_t>(v);
    }
    return cfg;
}

void summarize(const femopt::ExperimentConfig& cfg) {
    const auto& ex = cfg.experiment;
    std::cout << cfg.source << ": ok\n"
              << "  dim " << ex.dim() << ", " << femopt::to_string(ex.kind) << " elements, mesh type "
              << ex.distortion.mesh_type << ", reference "
              << (ex.mode == femopt::ReferenceMode::Exact ? "exact" : "half-grid") << '\n'
              << "  mode " << femopt::to_string(cfg.mode) << ", degrees";
    for (int p : cfg.degrees) std::cout << ' ' << p;
    std::cout << ", variables";
    for (auto v : cfg.variables) std::cout << ' ' << femopt::to_string(v);
    std::cout << "\n  output " << cfg.output_dir << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"femopt: predict the optimal number of degrees of freedom of FE computations"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    bool parallel = false;
    auto* run = app.add_subcommand("run", "run an experiment and write CSV, report and plot files");
    run->add_option("config", run_config, "experiment config file")->required();
    run->add_flag("--parallel", parallel, "run degrees concurrently (disables pct reporting)");
    run->add_option("--out", run_out, "output directory (overrides output.dir)");

    std::string kind;
    int level = 0, degree = 1;
    auto* dofs = app.add_subcommand("dofs", "print the number of DoFs");
    dofs->add_option("kind", kind, "interval, quad or triangle")->required();
    dofs->add_option("R", level, "refinement level")->required()->check(CLI::Range(0, 30));
    dofs->add_option("p", degree, "element degree")->required()->check(CLI::Range(1, 5));

    std::string check_config;
    auto* check = app.add_subcommand("check", "validate a config without running it");
    check->add_option("config", check_config, "experiment config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*dofs) {
            std::cout << femopt::count_dofs(femopt::parse_element_kind(kind), level, degree) << '\n';
            return kOk;
        }
        if (*check) {
            summarize(load(check_config));
            return kOk;
        }
        const femopt::ExperimentConfig cfg = load(run_config);
        const std::string dir = run_out.empty() ? cfg.output_dir : run_out;
        const femopt::RunResult result = femopt::run_experiment(cfg, parallel);
        femopt::write_outputs(cfg, result, dir);
        std::cout << femopt::report_text(cfg, result) << "\nwritten to " << dir << '\n';
        if (result.failed()) {
            for (const auto& d : result.degrees)
                for (const auto& r : d.pipelines)
                    if (!r.failure.empty())
                        std::cerr << "femopt: " << femopt::to_string(r.variable) << " p=" << r.p << ": " << r.failure
                                  << '\n';
            return kRuntime;
        }
        return kOk;
    } catch (const femopt::ConfigError& e) {
        std::cerr << "femopt: config error: " << e.what() << '\n';
        return kConfig;
    } catch (const femopt::MeshError& e) {
        std::cerr << "femopt: " << e.what() << '\n';
        return *dofs ? kConfig : kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "femopt: " << e.what() << '\n';
        return kRuntime;
    }
}
