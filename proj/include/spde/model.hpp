#pragma once

#include <filesystem>
#include <string>

#include "spde/core.hpp"
#include "spde/noise.hpp"
#include "spde/pde_solver.hpp"

namespace spde {

/// p0(a, x) = scale * exp(-rate * a) * (1 + bump * cos(pi x_0 / L_0)).
struct InitialProfile {
    double scale = 1.0;
    double rate = 0.0;
    double bump = 0.0;

    InitialData build(const Grid& g) const;
};

/// Everything a model file declares.
struct Model {
    Grid grid;
    VitalRates rates;
    NoiseSpec noise;
    InitialProfile initial;
    SolverConfig solver;
    /// Estimate checks run by `check`.
    bool check_apriori = true;
    bool check_weak_residual = true;
    bool check_positivity = true;
    double weak_residual_tol = 1e-2;
};

/// Parses a JSON model description; ConfigError on any missing or invalid
/// entry.
Model parse_model(const std::string& text);
Model load_model(const std::filesystem::path& path);

/// Grid with every step count divided by 2^level (n_x only where it stays
/// >= 1 and divides evenly; one-cell axes are left alone).
Grid coarsened(const Grid& g, int level);

} // namespace spde
