#include "spde/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "spde/io.hpp"
#include "spde/sde_oracle.hpp"

namespace spde {

namespace {

constexpr double kZ99 = 2.5758293035489004;

struct PathOutcome {
    std::optional<SolveReport> report;
    std::string error;
};

PathOutcome solve_one(const RunConfig& c, const Grid& g, const BrownianBundle& b, SolverKind kind,
                      int stride) {
    PathOutcome out;
    try {
        const InitialData p0 = c.model.initial.build(g);
        if (kind == SolverKind::Direct) {
            out.report = solve_spde_direct(c.model.noise, b, c.model.rates, p0, {stride});
        } else {
            SolverConfig sc = c.model.solver;
            sc.snapshot_stride = stride;
            out.report = solve_random_pde(c.model.noise, b, c.model.rates, p0, sc);
        }
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

// Welford accumulation in path order.
struct Accumulator {
    EnsembleStats s;
    Field m2;
    std::vector<double> pop_m2;

    void add(const SolveReport& r) {
        const Field& p = r.final_p();
        if (s.paths == 0) {
            s.grid = r.grid;
            s.mean = Field(r.grid);
            m2 = Field(r.grid);
            s.times = r.times;
            s.population_mean.assign(r.population.size(), 0.0);
            pop_m2.assign(r.population.size(), 0.0);
        }
        ++s.paths;
        const double n = s.paths;
        auto mean = s.mean.values();
        auto acc = m2.values();
        const auto v = p.values();
        for (std::size_t q = 0; q < v.size(); ++q) {
            const double d = v[q] - mean[q];
            mean[q] += d / n;
            acc[q] += d * (v[q] - mean[q]);
        }
        for (std::size_t k = 0; k < r.population.size(); ++k) {
            const double d = r.population[k] - s.population_mean[k];
            s.population_mean[k] += d / n;
            pop_m2[k] += d * (r.population[k] - s.population_mean[k]);
        }
        s.noise_step_warnings += r.noise_step_warnings;
        s.truncation_activations += r.truncation_activations;
        for (int it : r.picard_iterations)
            s.max_picard_iterations = std::max(s.max_picard_iterations, it);
    }

    EnsembleStats finish() {
        if (s.paths == 0)
            return s;
        const double denom = s.paths > 1 ? s.paths - 1.0 : 1.0;
        s.variance = m2 * (1.0 / denom);
        s.population_sd.resize(pop_m2.size());
        for (std::size_t k = 0; k < pop_m2.size(); ++k)
            s.population_sd[k] = std::sqrt(pop_m2[k] / denom);
        return s;
    }
};

void persist_path(const std::filesystem::path& dir, int m, const std::string& label,
                  const SolveReport& r) {
    const auto base = dir / "paths" / ("path_" + std::to_string(m));
    write_series_csv(base / ("series_" + label + ".csv"), r);
    write_field(base / ("p_T_" + label + ".bin"), r.final_p(), r.grid.T);
}

} // namespace

SolverKind parse_solver_kind(const std::string& s) {
    if (s == "rescaled")
        return SolverKind::Rescaled;
    if (s == "direct")
        return SolverKind::Direct;
    if (s == "both")
        return SolverKind::Both;
    throw ConfigError("unknown solver '" + s + "' (rescaled | direct | both)");
}

std::string to_string(SolverKind k) {
    switch (k) {
    case SolverKind::Rescaled:
        return "rescaled";
    case SolverKind::Direct:
        return "direct";
    case SolverKind::Both:
        return "both";
    }
    return "?";
}

std::uint64_t path_seed(std::uint64_t base, int path) {
    // Stream indices of the modes sit below 2^32; paths use the upper half.
    return derive_seed(base, (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(path));
}

BrownianBundle path_bundle(const RunConfig& c, int path) {
    const Grid& g = c.model.grid;
    return BrownianBundle::sample(path_seed(c.seed, path), c.model.noise.modes(), g.n_t, g.T)
        .coarsen(1 << c.level);
}

double EnsembleStats::ci99(int age, int cell) const {
    return kZ99 * std::sqrt(variance(age, cell) / paths);
}

double EnsembleStats::population_ci99(int level) const {
    return kZ99 * population_sd[level] / std::sqrt(static_cast<double>(paths));
}

RunResult run(const RunConfig& c) {
    if (c.paths < 1)
        throw ConfigError("ensemble: need at least one path");
    if (c.workers < 1)
        throw ConfigError("ensemble: need at least one worker");
    const Grid g = coarsened(c.model.grid, c.level);
    const int stride = c.model.solver.snapshot_stride;

    std::vector<SolverKind> kinds;
    if (c.solver != SolverKind::Direct)
        kinds.push_back(SolverKind::Rescaled);
    if (c.solver != SolverKind::Rescaled)
        kinds.push_back(SolverKind::Direct);

    RunResult result;
    for (SolverKind kind : kinds) {
        const std::string label = to_string(kind);
        std::vector<PathOutcome> outcomes(static_cast<std::size_t>(c.paths));
#pragma omp parallel for schedule(dynamic) num_threads(c.workers)
        for (int m = 0; m < c.paths; ++m) {
            try {
                outcomes[m] = solve_one(c, g, path_bundle(c, m), kind, stride);
            } catch (const std::exception& e) {
                outcomes[m].error = e.what();
            }
        }
        Accumulator acc;
        acc.s.solver = label;
        for (int m = 0; m < c.paths; ++m) {
            const PathOutcome& o = outcomes[m];
            if (!o.report) {
                result.failures.push_back({m, label, o.error});
                continue;
            }
            if (!c.out_dir.empty() && c.persist_paths)
                persist_path(c.out_dir, m, label, *o.report);
            acc.add(*o.report);
        }
        result.stats.push_back(acc.finish());
        if (!c.out_dir.empty() && result.stats.back().paths > 0)
            write_stats(c.out_dir / ("stats_" + label), result.stats.back());
    }
    return result;
}

Field restrict_to(const Field& fine, const Grid& coarse) {
    const Grid& g = fine.grid();
    if (g.n_a % coarse.n_a != 0 || g.dim != coarse.dim)
        throw ConfigError("restrict: grids are not nested");
    const int fa = g.n_a / coarse.n_a;
    std::array<int, 2> fx{1, 1};
    for (int k = 0; k < g.dim; ++k) {
        if (g.n_x[k] % coarse.n_x[k] != 0)
            throw ConfigError("restrict: grids are not nested");
        fx[k] = g.n_x[k] / coarse.n_x[k];
    }
    const double inv = 1.0 / (fx[0] * fx[1]);
    Field out(coarse);
    for (int i = 0; i < coarse.age_nodes(); ++i)
        for (int s = 0; s < coarse.space_cells(); ++s) {
            const auto idx = coarse.cell_multi_index(s);
            double sum = 0.0;
            for (int u = 0; u < fx[0]; ++u)
                for (int v = 0; v < fx[1]; ++v) {
                    std::array<int, 2> f{idx[0] * fx[0] + u, idx[1] * fx[1] + v};
                    sum += fine(i * fa, g.cell_index(f));
                }
            out(i, s) = sum * inv;
        }
    return out;
}

ObservedOrder fit_order(const std::vector<double>& dt, const std::vector<double>& err,
                        double rounding) {
    ObservedOrder o;
    o.exact = std::all_of(err.begin(), err.end(), [&](double e) { return e <= rounding; });
    if (o.exact)
        return o;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < dt.size(); ++k) {
        if (!(err[k] > 0.0))
            continue;
        const double x = std::log(dt[k]);
        const double y = std::log(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2)
        return o;
    o.value = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return o;
}

ConvergenceTable convergence_study(const RunConfig& c, int levels) {
    if (levels < 3)
        throw ConfigError("convergence: need at least 3 levels");
    const SolverConfig& sc = c.model.solver;
    const Grid& model_grid = c.model.grid;
    const BrownianBundle master =
        BrownianBundle::sample(path_seed(c.seed, 0), c.model.noise.modes(), model_grid.n_t,
                               model_grid.T);

    std::vector<Field> rescaled, direct;
    std::vector<Grid> grids;
    for (int l = 0; l < levels; ++l) {
        const int level = c.level + l;
        const Grid g = coarsened(model_grid, level);
        const BrownianBundle b = master.coarsen(1 << level);
        const InitialData p0 = c.model.initial.build(g);
        SolverConfig s = sc;
        s.snapshot_stride = g.n_t;
        rescaled.push_back(solve_random_pde(c.model.noise, b, c.model.rates, p0, s).final_p());
        direct.push_back(solve_spde_direct(c.model.noise, b, c.model.rates, p0, {g.n_t}).final_p());
        grids.push_back(g);
    }

    ConvergenceTable t;
    std::vector<double> dts, step_err, direct_err, cross_err, step_dts;
    double scale = 0.0;
    for (int l = 0; l < levels; ++l) {
        const Grid& g = grids[l];
        ConvergenceRow row;
        row.level = c.level + l;
        row.dt = g.dt();
        const Field ref = restrict_to(rescaled.front(), g);
        row.rescaled_error = h_norm(rescaled[l] - ref);
        row.direct_error = h_norm(direct[l] - ref);
        row.cross = h_norm(direct[l] - rescaled[l]);
        if (l > 0) {
            row.rescaled_step = h_norm(rescaled[l] - restrict_to(rescaled[l - 1], g));
            step_dts.push_back(row.dt);
            step_err.push_back(row.rescaled_step);
        }
        scale = std::max(scale, h_norm(ref));
        dts.push_back(row.dt);
        direct_err.push_back(row.direct_error);
        cross_err.push_back(row.cross);
        t.rows.push_back(row);
    }
    t.reference_norm = h_norm(rescaled.front());
    const double rounding = 1e-12 * std::max(1.0, scale);
    t.rescaled = fit_order(step_dts, step_err, rounding);
    t.direct = fit_order(dts, direct_err, rounding);
    t.cross = fit_order(dts, cross_err, rounding);
    return t;
}

void write_stats(const std::filesystem::path& dir, const EnsembleStats& s) {
    write_field(dir / "mean_T.bin", s.mean, s.grid.T);
    write_field(dir / "variance_T.bin", s.variance, s.grid.T);
    {
        std::ofstream os(dir / "population.csv");
        if (!os)
            throw IoError("cannot write " + (dir / "population.csv").string());
        os << std::setprecision(17) << "t,mean,sd,ci99\n";
        for (std::size_t k = 0; k < s.times.size(); ++k)
            os << s.times[k] << ',' << s.population_mean[k] << ',' << s.population_sd[k] << ','
               << s.population_ci99(static_cast<int>(k)) << '\n';
    }
    nlohmann::json j;
    j["solver"] = s.solver;
    j["paths"] = s.paths;
    j["noise_step_warnings"] = s.noise_step_warnings;
    j["truncation_activations"] = s.truncation_activations;
    j["max_picard_iterations"] = s.max_picard_iterations;
    std::ofstream os(dir / "summary.json");
    if (!os)
        throw IoError("cannot write " + (dir / "summary.json").string());
    os << j.dump(2) << '\n';
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& t) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot write " + path.string());
    os << std::setprecision(10);
    os << "level,dt,rescaled_error,rescaled_step,direct_error,cross\n";
    for (const auto& r : t.rows)
        os << r.level << ',' << r.dt << ',' << r.rescaled_error << ',' << r.rescaled_step << ','
           << r.direct_error << ',' << r.cross << '\n';
    auto order = [](const ObservedOrder& o) {
        std::ostringstream ss;
        if (o.exact)
            ss << "exact";
        else
            ss << o.value;
        return ss.str();
    };
    os << "# order rescaled=" << order(t.rescaled) << " direct=" << order(t.direct)
       << " cross=" << order(t.cross) << " reference_norm=" << t.reference_norm << '\n';
}

} // namespace spde
