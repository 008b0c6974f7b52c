#include "spde/sde_oracle.hpp"

#include <cmath>
#include <vector>

#include "spde/rescale.hpp"

namespace spde {

EmStepResult em_step(const Field& p, std::span<const double> dbeta, const NoiseTables& tables,
                     const VitalRates& rates, const UWeights& u_weights,
                     const DiffusionOperator& diffusion, int step, double noise_warning) {
    const Grid& g = p.grid();
    const CoefficientSnapshot left = identity_snapshot(rates, g, step);
    const CoefficientSnapshot right = identity_snapshot(rates, g, step + 1);
    const double U = u_weights.vanishes() ? 0.0 : u_weights.apply(p);
    const double scale = 1.0;
    Field mu(g), m(g);
    for (int i = 0; i < g.age_nodes(); ++i) {
        const double a = g.age(i);
        for (int s = 0; s < g.space_cells(); ++s) {
            const Point x = g.cell_center(s);
            mu(i, s) = scale * rates.mu_S(left.t, a, x, U);
            m(i, s) = scale * rates.m0(a, x, U) * right.m_factor(i, s);
        }
    }
    const StepProblem pb{p, left, right, rates, u_weights, diffusion, step};
    EmStepResult out{linear_step(pb, mu, m), false};
    if (tables.modes() == 0)
        return out;
    const Field xi = tables.weighted_sum(dbeta);
    if (xi.max_abs() > noise_warning)
        out.warning = true;
    auto v = out.p.values();
    const auto w = xi.values();
    for (std::size_t q = 0; q < v.size(); ++q)
        v[q] *= 1.0 + w[q];
    return out;
}

SolveReport solve_spde_direct(const NoiseSpec& spec, const BrownianBundle& bundle,
                              const VitalRates& rates, const InitialData& p0,
                              const EmConfig& config) {
    const Grid& g = p0.p0.grid();
    g.validate();
    spec.check(g);
    require_compatible(bundle, spec, g);
    if (config.snapshot_stride < 1)
        throw ConfigError("direct solver: snapshot stride must be >= 1");
    p0.p0.require_finite("initial data");

    const NoiseTables tables(spec, g);
    const UWeights uw(g, rates.gamma, rates.u_region);
    const DiffusionOperator diffusion(g);

    SolveReport rep;
    rep.grid = g;
    auto record = [&](int n, const Field& p) {
        const Field y = backward_transform(p, tables.fields(bundle, n).W);
        rep.times.push_back(g.time(n));
        rep.h_norm_y.push_back(h_norm(y));
        rep.u_value.push_back(uw.apply(p));
        double b = 0.0;
        for (double v : y.row(0))
            b += v;
        rep.births.push_back(b * g.cell_volume());
        rep.population.push_back(integral(p));
        if (n % config.snapshot_stride == 0 || n == g.n_t) {
            rep.stored_levels.push_back(n);
            rep.p.push_back(p);
            rep.y.push_back(y);
        }
    };

    Field p = p0.p0;
    record(0, p);
    std::vector<double> dbeta(static_cast<std::size_t>(spec.modes()));
    for (int n = 0; n < g.n_t; ++n) {
        for (int j = 0; j < spec.modes(); ++j)
            dbeta[j] = bundle.increment(j, n);
        EmStepResult step =
            em_step(p, dbeta, tables, rates, uw, diffusion, n, config.noise_warning);
        if (step.warning)
            ++rep.noise_step_warnings;
        step.p.require_finite("direct solver");
        p = std::move(step.p);
        rep.picard_iterations.push_back(0);
        rep.contraction.push_back(0.0);
        record(n + 1, p);
    }
    return rep;
}

} // namespace spde
