#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "spde/ensemble.hpp"
#include "spde/estimates.hpp"
#include "spde/io.hpp"
#include "spde/sde_oracle.hpp"

using namespace spde;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kSolver = 1, kCheck = 2, kConfig = 3 };

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    std::string solver = "rescaled";
    int level = 0;
    int paths = 100;
    int workers = 1;
    int stride = 0; // 0: take the model's
    int levels = 4;
    bool persist = false;
};

RunConfig make_config(const Options& o) {
    RunConfig c;
    c.model = load_model(o.config);
    if (o.stride > 0)
        c.model.solver.snapshot_stride = o.stride;
    c.solver = parse_solver_kind(o.solver);
    c.level = o.level;
    c.paths = o.paths;
    c.seed = o.seed;
    c.workers = o.workers;
    c.persist_paths = o.persist;
    if (!o.out.empty())
        c.out_dir = o.out;
    return c;
}

SolveReport solve(const RunConfig& c, SolverKind kind, const Grid& g, const BrownianBundle& b) {
    const InitialData p0 = c.model.initial.build(g);
    if (kind == SolverKind::Direct)
        return solve_spde_direct(c.model.noise, b, c.model.rates, p0,
                                 {c.model.solver.snapshot_stride});
    return solve_random_pde(c.model.noise, b, c.model.rates, p0, c.model.solver);
}

void summary(const char* label, const SolveReport& r) {
    int max_it = 0;
    for (int it : r.picard_iterations)
        max_it = std::max(max_it, it);
    std::printf("%-9s |y(T)|=%.6e U(T)=%.6e population(T)=%.6e picard<=%d truncations=%ld "
                "noise_warnings=%ld\n",
                label, r.h_norm_y.back(), r.u_value.back(), r.population.back(), max_it,
                r.truncation_activations, r.noise_step_warnings);
}

void persist(const fs::path& dir, const std::string& label, const SolveReport& r) {
    write_series_csv(dir / ("series_" + label + ".csv"), r);
    write_snapshots(dir / ("snapshots_" + label), r);
}

int cmd_run(const Options& o) {
    const RunConfig c = make_config(o);
    const Grid g = coarsened(c.model.grid, c.level);
    const BrownianBundle b = path_bundle(c, 0);
    if (!c.out_dir.empty())
        write_bundle(c.out_dir / "bundle.bin", b);
    for (SolverKind k : {SolverKind::Rescaled, SolverKind::Direct}) {
        if (c.solver != SolverKind::Both && c.solver != k)
            continue;
        const SolveReport r = solve(c, k, g, b);
        summary(to_string(k).c_str(), r);
        if (!c.out_dir.empty())
            persist(c.out_dir, to_string(k), r);
    }
    return kOk;
}

int cmd_compare(const Options& o) {
    RunConfig c = make_config(o);
    const Grid g = coarsened(c.model.grid, c.level);
    const BrownianBundle b = path_bundle(c, 0);
    const SolveReport r = solve(c, SolverKind::Rescaled, g, b);
    const SolveReport d = solve(c, SolverKind::Direct, g, b);
    summary("rescaled", r);
    summary("direct", d);
    const double diff = h_norm(r.final_p() - d.final_p());
    const double ref = h_norm(r.final_p());
    std::printf("difference at T: %.6e (relative %.6e)\n", diff, ref > 0 ? diff / ref : 0.0);
    if (!c.out_dir.empty()) {
        persist(c.out_dir, "rescaled", r);
        persist(c.out_dir, "direct", d);
        std::ofstream os(c.out_dir / "compare.json");
        nlohmann::json j{{"difference", diff}, {"relative", ref > 0 ? diff / ref : 0.0}};
        os << j.dump(2) << '\n';
    }
    return kOk;
}

int cmd_convergence(const Options& o) {
    const RunConfig c = make_config(o);
    const ConvergenceTable t = convergence_study(c, o.levels);
    std::printf("%5s %12s %14s %14s %14s %14s\n", "level", "dt", "rescaled_err", "rescaled_step",
                "direct_err", "cross");
    for (const auto& r : t.rows)
        std::printf("%5d %12.5e %14.6e %14.6e %14.6e %14.6e\n", r.level, r.dt, r.rescaled_error,
                    r.rescaled_step, r.direct_error, r.cross);
    auto show = [](const ObservedOrder& x) {
        return x.exact ? std::string("exact") : std::to_string(x.value);
    };
    std::printf("observed order: rescaled %s, direct %s, cross %s\n", show(t.rescaled).c_str(),
                show(t.direct).c_str(), show(t.cross).c_str());
    if (!c.out_dir.empty())
        write_convergence_csv(c.out_dir / "convergence.csv", t);
    return kOk;
}

int cmd_ensemble(const Options& o) {
    const RunConfig c = make_config(o);
    const RunResult r = run(c);
    for (const EnsembleStats& s : r.stats) {
        const int last = static_cast<int>(s.times.size()) - 1;
        if (s.paths == 0) {
            std::printf("%-9s no successful paths\n", s.solver.c_str());
            continue;
        }
        std::printf("%-9s paths=%d population(T)=%.6e +- %.3e (99%%) picard<=%d truncations=%ld "
                    "noise_warnings=%ld\n",
                    s.solver.c_str(), s.paths, s.population_mean[last], s.population_ci99(last),
                    s.max_picard_iterations, s.truncation_activations, s.noise_step_warnings);
    }
    for (const PathFailure& f : r.failures)
        std::fprintf(stderr, "path %d (%s) failed: %s\n", f.path, f.solver.c_str(),
                     f.message.c_str());
    return r.failures.empty() ? kOk : kSolver;
}

int cmd_check(const Options& o) {
    RunConfig c = make_config(o);
    c.model.solver.snapshot_stride = 1;
    const Grid g = coarsened(c.model.grid, c.level);
    const BrownianBundle b = path_bundle(c, 0);
    const RescaledCoefficients coeffs(c.model.noise, b, c.model.rates, g);
    const InitialData p0 = c.model.initial.build(g);
    const SolveReport r = solve_random_pde(coeffs, c.model.rates, p0, c.model.solver);

    std::vector<CheckRow> rows;
    if (c.model.check_apriori) {
        const EstimateConstants k = compute_constants(coeffs, c.model.rates, r.y.front(),
                                                      c.model.solver.c0, c.model.solver.c1);
        const AprioriResult a = apriori_check(r, k, boundary_history(coeffs));
        rows.push_back({"apriori_ratio", a.max_ratio, 1.0, a.passed});
        std::printf("C_est=%.6e R0=%.6e N0=%.6e L1=%.6e L2=%.6e\n", k.C_est, k.R0, k.N0, k.L1,
                    k.L2);
    }
    if (c.model.check_weak_residual) {
        const WeakResidual w = weak_residual(r, c.model.rates, coeffs);
        rows.push_back({"weak_residual", w.max_abs, c.model.weak_residual_tol,
                        w.max_abs <= c.model.weak_residual_tol});
    }
    if (c.model.check_positivity && p0.nonnegative) {
        double lowest = 0.0;
        for (const Field& p : r.p)
            lowest = std::min(lowest, p.min());
        rows.push_back({"min_p", lowest, 0.0, lowest >= 0.0});
    }
    rows.push_back({"truncation_activations", static_cast<double>(r.truncation_activations), 0.0,
                    r.truncation_activations == 0});

    bool ok = true;
    for (const CheckRow& row : rows) {
        std::printf("%-24s %s value=%.6e threshold=%.6e\n", row.name.c_str(),
                    row.pass ? "pass" : "FAIL", row.value, row.threshold);
        ok = ok && row.pass;
    }
    if (!c.out_dir.empty()) {
        write_checks_csv(c.out_dir / "checks.csv", rows);
        write_series_csv(c.out_dir / "series_rescaled.csv", r);
    }
    return ok ? kOk : kCheck;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-structured population SPDE solver"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "model file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out, "output directory");
        sub->add_option("-s,--seed", o.seed, "base seed");
        sub->add_option("-l,--level", o.level, "coarsening level of the model grid")->check(CLI::Range(0, 20));
        sub->add_option("--stride", o.stride, "snapshot stride")->check(CLI::PositiveNumber);
    };

    auto* run_cmd = app.add_subcommand("run", "solve one path");
    common(run_cmd);
    run_cmd->add_option("--solver", o.solver, "rescaled | direct | both");

    auto* compare_cmd = app.add_subcommand("compare", "both solvers on one path");
    common(compare_cmd);

    auto* conv_cmd = app.add_subcommand("convergence", "refinement study on one path");
    common(conv_cmd);
    conv_cmd->add_option("--levels", o.levels, "number of levels (>= 3)");

    auto* ens_cmd = app.add_subcommand("ensemble", "Monte Carlo ensemble");
    common(ens_cmd);
    ens_cmd->add_option("--solver", o.solver, "rescaled | direct | both");
    ens_cmd->add_option("-M,--paths", o.paths, "ensemble size")->check(CLI::PositiveNumber);
    ens_cmd->add_option("-j,--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    ens_cmd->add_flag("--persist", o.persist, "keep per-path series and final snapshots");

    auto* check_cmd = app.add_subcommand("check", "a-priori, weak-form and positivity checks");
    common(check_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    try {
        if (!o.out.empty())
            fs::create_directories(o.out);
        if (*run_cmd)
            return cmd_run(o);
        if (*compare_cmd)
            return cmd_compare(o);
        if (*conv_cmd)
            return cmd_convergence(o);
        if (*ens_cmd)
            return cmd_ensemble(o);
        return cmd_check(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
}
