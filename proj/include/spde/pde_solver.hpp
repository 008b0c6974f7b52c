#pragma once

#include <optional>
#include <vector>

#include "spde/core.hpp"
#include "spde/kernels.hpp"
#include "spde/noise.hpp"
#include "spde/rescale.hpp"

namespace spde {

/// Radial clipping of the nonlinearity argument at H-norm N.
struct TruncationGuard {
    double N = 0.0;
    double N0 = 0.0;
    long activations = 0;
};

/// Result of clipping u: the argument at which the rates are evaluated and
/// the factor |argument|/|u| applied to the rate coefficient, so that
/// coefficient * u reproduces S_i(argument).
struct Truncation {
    Field argument;
    double scale = 1.0;
    bool active = false;
};

Truncation truncate(const Field& u, TruncationGuard& guard);

struct SolverConfig {
    double tol = 1e-10;
    int max_iter = 50;
    /// Truncation radius N; the a-priori threshold N0 when unset.
    std::optional<double> truncation_radius;
    /// Store every stride-th time level (the last level is always stored).
    int snapshot_stride = 1;
    /// Calibration of the a-priori constants used for N0.
    double c0 = 1.0;
    double c1 = 0.5;
};

/// One time step of the rescaled problem: data at t_n (`left`) drives the
/// transport, decay and diffusion; data at t_{n+1} (`right`) enters U(e^W y)
/// and the renewal kernel m.
struct StepProblem {
    const Field& y_prev;
    const CoefficientSnapshot& left;
    const CoefficientSnapshot& right;
    const VitalRates& rates;
    const UWeights& u_weights;
    const DiffusionOperator& diffusion;
    int step = 0;
};

struct StepResult {
    Field y;
    int iterations = 0;   // fixed-point updates after the initial solve
    double contraction = 0.0; // largest ratio of successive iterate differences
    std::vector<double> differences;
};

/// One linear solve with frozen rates (the map zeta -> v^zeta).
Field linear_step(const StepProblem& problem, const Field& mu_S_frozen, const Field& m_frozen);

StepResult picard_step_solve(const StepProblem& problem, TruncationGuard& guard, double tol,
                             int max_iter);

struct SolveReport {
    Grid grid;
    /// Stored snapshots.
    std::vector<int> stored_levels;
    std::vector<Field> y;
    std::vector<Field> p;
    /// Per step (size n_t).
    std::vector<int> picard_iterations;
    std::vector<double> contraction;
    long truncation_activations = 0;
    double truncation_radius = 0.0;
    double truncation_threshold = 0.0;
    /// Explicit noise factor warnings (direct integrator only).
    long noise_step_warnings = 0;
    /// Per time level (size n_t + 1).
    std::vector<double> times;
    std::vector<double> h_norm_y;
    std::vector<double> u_value; // U(e^W y) = U(p)
    std::vector<double> births;  // integral of y(t,0,x) over O
    std::vector<double> population; // integral of p over (0,a+) x O

    bool full_stride() const { return static_cast<int>(stored_levels.size()) == grid.n_t + 1; }
    const Field& final_p() const { return p.back(); }
    const Field& final_y() const { return y.back(); }
};

/// Pathwise solve of the rescaled problem by splitting (transport, renewal,
/// diffusion) inside a Picard loop per step.
SolveReport solve_random_pde(const NoiseSpec& spec, const BrownianBundle& bundle,
                             const VitalRates& rates, const InitialData& p0,
                             const SolverConfig& config = {});

/// Same, reusing a prebuilt coefficient evaluator.
SolveReport solve_random_pde(const RescaledCoefficients& coeffs, const VitalRates& rates,
                             const InitialData& p0, const SolverConfig& config = {});

} // namespace spde
