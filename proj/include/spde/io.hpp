#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spde/core.hpp"
#include "spde/estimates.hpp"
#include "spde/noise.hpp"
#include "spde/pde_solver.hpp"

namespace spde {

/// Binary bundle file: "SPDEBND1", u64 modes, u64 steps, u64 seed, u64 level,
/// f64 T, then increments [mode][step] and nodes [mode][step + 1], all
/// little-endian.
void write_bundle(const std::filesystem::path& path, const BrownianBundle& b);
BrownianBundle read_bundle(const std::filesystem::path& path);

/// Binary field file: "SPFLD001", u64 dim, u64 n_a, u64 n_x0, u64 n_x1,
/// f64 a_plus, f64 extent0, f64 extent1, f64 t, then values age-major.
void write_field(const std::filesystem::path& path, const Field& f, double t);

struct FieldFile {
    int dim = 1;
    int n_a = 0;
    std::array<int, 2> n_x{1, 1};
    double a_plus = 0.0;
    std::array<double, 2> extent{0.0, 0.0};
    double t = 0.0;
    std::vector<double> values;
};

FieldFile read_field(const std::filesystem::path& path);

/// t, h_norm_y, U, births per time level.
void write_series_csv(const std::filesystem::path& path, const SolveReport& r);

/// name, value, threshold, pass per row.
void write_checks_csv(const std::filesystem::path& path, const std::vector<CheckRow>& rows);

/// Writes every stored level of p as p_<level>.bin into `dir`.
void write_snapshots(const std::filesystem::path& dir, const SolveReport& r);

} // namespace spde
