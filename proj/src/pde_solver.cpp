#include "spde/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spde/estimates.hpp"

namespace spde {

Truncation truncate(const Field& u, TruncationGuard& guard) {
    const double norm = h_norm(u);
    if (norm <= guard.N)
        return {u, 1.0, false};
    ++guard.activations;
    const double scale = guard.N / norm;
    return {u * scale, scale, true};
}

Field linear_step(const StepProblem& pb, const Field& mu_S_frozen, const Field& m_frozen) {
    const Grid& g = pb.y_prev.grid();
    Field y = transport_reaction_substep(pb.y_prev, pb.left.g1, mu_S_frozen, g.dt());
    solve_renewal_row(y, m_frozen);
    return pb.diffusion.apply(y, pb.left.alpha, pb.left.k, &pb.left.g2, g.dt());
}

namespace {

// Rate coefficients frozen at the argument chosen by the truncation guard.
void freeze_rates(const StepProblem& pb, const Truncation& tr, Field& mu, Field& m) {
    const Grid& g = pb.y_prev.grid();
    const double U =
        pb.u_weights.vanishes() ? 0.0 : pb.u_weights.apply_scaled(tr.argument, pb.right.expW);
    for (int i = 0; i < g.age_nodes(); ++i) {
        const double a = g.age(i);
        for (int s = 0; s < g.space_cells(); ++s) {
            const Point x = g.cell_center(s);
            mu(i, s) = tr.scale * pb.rates.mu_S(pb.left.t, a, x, U);
            m(i, s) = tr.scale * pb.rates.m0(a, x, U) * pb.right.m_factor(i, s);
        }
    }
}

} // namespace

StepResult picard_step_solve(const StepProblem& pb, TruncationGuard& guard, double tol,
                             int max_iter) {
    const Grid& g = pb.y_prev.grid();
    Field zeta = pb.y_prev;
    Field mu(g), m(g);
    StepResult res;
    double prev_diff = 0.0;
    for (int solves = 1;; ++solves) {
        freeze_rates(pb, truncate(zeta, guard), mu, m);
        Field next = linear_step(pb, mu, m);
        next.require_finite("picard iterate");
        const double zeta_norm = h_norm(zeta);
        const double diff = h_norm(next - zeta);
        res.differences.push_back(diff);
        // Differences at rounding level carry no contraction information.
        const double floor = 1e-13 * std::max(1.0, zeta_norm);
        if (solves > 1 && prev_diff > floor)
            res.contraction = std::max(res.contraction, diff / prev_diff);
        zeta = std::move(next);
        if (diff <= tol * std::max(1.0, zeta_norm)) {
            res.iterations = solves - 1;
            break;
        }
        if (solves - 1 >= max_iter) {
            std::ostringstream os;
            os << "picard: no convergence within " << max_iter << " iterations at step "
               << pb.step << " (last ratio " << res.contraction << ")";
            throw NonConvergenceError(os.str(), res.contraction, pb.step);
        }
        prev_diff = diff;
    }
    res.y = std::move(zeta);
    return res;
}

SolveReport solve_random_pde(const NoiseSpec& spec, const BrownianBundle& bundle,
                             const VitalRates& rates, const InitialData& p0,
                             const SolverConfig& config) {
    return solve_random_pde(build_coefficients(spec, bundle, rates, p0.p0.grid()), rates, p0,
                            config);
}

SolveReport solve_random_pde(const RescaledCoefficients& coeffs, const VitalRates& rates,
                             const InitialData& p0, const SolverConfig& config) {
    const Grid& g = coeffs.grid();
    if (!(p0.p0.grid() == g))
        throw ConfigError("solver: initial data grid differs from the coefficient grid");
    if (config.snapshot_stride < 1 || config.max_iter < 0)
        throw ConfigError("solver: snapshot stride must be >= 1 and max_iter >= 0");
    p0.p0.require_finite("initial data");

    SolveReport rep;
    rep.grid = g;
    TruncationGuard guard;
    if (config.truncation_radius) {
        guard.N = *config.truncation_radius;
    } else {
        const EstimateConstants consts = compute_constants(coeffs, rates, p0.p0, config.c0, config.c1);
        guard.N0 = consts.N0;
        guard.N = consts.N0;
    }
    rep.truncation_radius = guard.N;
    rep.truncation_threshold = guard.N0;

    const UWeights uw(g, rates.gamma, rates.u_region);
    const DiffusionOperator diffusion(g);

    auto record = [&](int n, const Field& y, const CoefficientSnapshot& snap) {
        rep.times.push_back(g.time(n));
        rep.h_norm_y.push_back(h_norm(y));
        rep.u_value.push_back(uw.apply_scaled(y, snap.expW));
        double b = 0.0;
        for (double v : y.row(0))
            b += v;
        rep.births.push_back(b * g.cell_volume());
        const Field p = hadamard(y, snap.expW);
        rep.population.push_back(integral(p));
        if (n % config.snapshot_stride == 0 || n == g.n_t) {
            rep.stored_levels.push_back(n);
            rep.y.push_back(y);
            rep.p.push_back(p);
        }
    };

    // y(0) = p0 since W(0) = 0.
    Field y = p0.p0;
    CoefficientSnapshot left = coeffs.at(0);
    record(0, y, left);
    for (int n = 0; n < g.n_t; ++n) {
        CoefficientSnapshot right = coeffs.at(n + 1);
        const StepProblem pb{y, left, right, rates, uw, diffusion, n};
        StepResult step = picard_step_solve(pb, guard, config.tol, config.max_iter);
        rep.picard_iterations.push_back(step.iterations);
        rep.contraction.push_back(step.contraction);
        y = std::move(step.y);
        record(n + 1, y, right);
        left = std::move(right);
    }
    rep.truncation_activations = guard.activations;
    return rep;
}

} // namespace spde
