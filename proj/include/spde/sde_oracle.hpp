#pragma once

#include <span>

#include "spde/core.hpp"
#include "spde/noise.hpp"
#include "spde/pde_solver.hpp"

namespace spde {

/// Direct Euler-Maruyama integrator of the original equation.
struct EmConfig {
    int snapshot_stride = 1;
    /// Steps whose noise factor |sum_j mu_j dbeta_j| exceeds this are counted
    /// as warnings (the explicit factor 1 + sum can change sign beyond 1).
    double noise_warning = 1.0;
};

struct EmStepResult {
    Field p;
    bool warning = false;
};

/// One step: deterministic splitting with U(p) frozen at the previous level,
/// then p <- p (1 + sum_j mu_j dbeta_j) pointwise.
EmStepResult em_step(const Field& p, std::span<const double> dbeta, const NoiseTables& tables,
                     const VitalRates& rates, const UWeights& u_weights,
                     const DiffusionOperator& diffusion, int step, double noise_warning = 1.0);

SolveReport solve_spde_direct(const NoiseSpec& spec, const BrownianBundle& bundle,
                              const VitalRates& rates, const InitialData& p0,
                              const EmConfig& config = {});

} // namespace spde
