#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spde/model.hpp"
#include "spde/pde_solver.hpp"

namespace spde {

enum class SolverKind { Rescaled, Direct, Both };

SolverKind parse_solver_kind(const std::string& s);
std::string to_string(SolverKind k);

struct RunConfig {
    Model model;
    SolverKind solver = SolverKind::Rescaled;
    /// Coarsening level of the model grid (and of each path's bundle).
    int level = 0;
    int paths = 1;
    std::uint64_t seed = 1;
    /// Empty: nothing is written.
    std::filesystem::path out_dir;
    /// Per-path series and final snapshots under out_dir/paths/.
    bool persist_paths = false;
    int workers = 1;
};

/// Seed of path m.
std::uint64_t path_seed(std::uint64_t base, int path);

/// The bundle of path m at the given level: sampled on the model's time grid
/// and coarsened by 2^level, so every level sees the same Brownian path.
BrownianBundle path_bundle(const RunConfig& c, int path);

struct PathFailure {
    int path;
    std::string solver;
    std::string message;
};

struct EnsembleStats {
    std::string solver;
    int paths = 0; // successful paths
    Grid grid;
    Field mean;     // of p at T
    Field variance; // unbiased sample variance of p at T
    std::vector<double> times;
    std::vector<double> population_mean;
    std::vector<double> population_sd;
    long noise_step_warnings = 0;
    long truncation_activations = 0;
    int max_picard_iterations = 0;

    /// Half-width of the 99% normal confidence interval of the mean.
    double ci99(int cell_age, int cell) const;
    double population_ci99(int level) const;
};

struct RunResult {
    std::vector<EnsembleStats> stats;
    std::vector<PathFailure> failures;
};

/// Monte Carlo ensemble. Paths run on a pool of `workers` threads; results
/// are reduced serially in path order, so the output depends only on the
/// configuration.
RunResult run(const RunConfig& config);

/// Coarse-grid restriction: age nodes are subsampled, spatial cells averaged.
Field restrict_to(const Field& fine, const Grid& coarse);

struct ConvergenceRow {
    int level = 0;
    double dt = 0.0;
    double rescaled_error = 0.0;  // vs finest rescaled solution
    double rescaled_step = 0.0;   // vs rescaled solution one level finer
    double direct_error = 0.0;    // direct route vs finest rescaled solution
    double cross = 0.0;           // direct vs rescaled, same level
};

struct ObservedOrder {
    double value = 0.0;
    bool exact = false; // every error at rounding level
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows; // finest first
    ObservedOrder rescaled;           // fitted to rescaled_step
    ObservedOrder direct;             // fitted to direct_error
    ObservedOrder cross;              // fitted to cross
    double reference_norm = 0.0;      // H-norm of the finest rescaled p at T
};

/// Least-squares slope of log(err) against log(dt).
ObservedOrder fit_order(const std::vector<double>& dt, const std::vector<double>& err,
                        double rounding);

/// One fixed path (path 0 of the configured seed) solved by both routes at
/// levels config.level .. config.level + levels - 1. All errors are discrete
/// H-norms of p at T on the coarser grid of each comparison.
ConvergenceTable convergence_study(const RunConfig& config, int levels);

void write_stats(const std::filesystem::path& dir, const EnsembleStats& s);
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& t);

} // namespace spde
