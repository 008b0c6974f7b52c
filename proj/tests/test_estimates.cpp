#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spde/estimates.hpp"

using namespace spde;
using spde::testing::constant_noise;
using spde::testing::constant_rates;
using spde::testing::logistic_rates;
using spde::testing::random_field;

namespace {

EstimateInputs sample_inputs() {
    EstimateInputs in;
    in.c0 = 1.3;
    in.c1 = 0.7;
    in.T = 0.8;
    in.a_plus = 2.0;
    in.sup_g1 = 0.4;
    in.sup_g2 = 0.6;
    in.sup_div_g2 = 0.2;
    in.mu_inf = 1.1;
    in.m0_inf = 0.9;
    in.gamma_inf = 1.0;
    in.c_W0 = 1.2;
    in.c_W = 1.5;
    in.meas_OU = 0.5;
    in.y0_norm_sq = 3.0;
    in.k_integral = 0.25;
    in.L_muS_R0 = 0.3;
    in.L_m0_R0 = 0.2;
    return in;
}

struct Run {
    Grid g;
    VitalRates rates;
    NoiseSpec spec;
    RescaledCoefficients coeffs;
    InitialData p0;
    SolveReport report;
    EstimateConstants consts;

    Run(const Grid& grid, VitalRates r, NoiseSpec s, const BrownianBundle& b, const Field& init)
        : g(grid), rates(std::move(r)), spec(std::move(s)), coeffs(spec, b, rates, g),
          p0(InitialData::from_field(init)), report(solve_random_pde(coeffs, rates, p0)),
          consts(compute_constants(coeffs, rates, report.y.front())) {}

    DependenceRun dep() const { return {report, coeffs, consts}; }
};

} // namespace

TEST_CASE("constants recompute from their inputs") {
    const EstimateInputs in = sample_inputs();
    const double e = 1.0 + 0.4 + 0.36 + 2.0 * 0.81 * 1.44 + 1.21;
    CHECK(c_est(in) == doctest::Approx(1.3 * std::exp(0.7 * e * 0.8)).epsilon(1e-15));
    const double e0 = 1.0 + 0.4 + 0.36 + 2.0 * (1.2 * 0.9) * (1.2 * 0.9) + 1.1;
    const double R0 = 1.3 * std::exp(0.7 * e0) * 3.25;
    CHECK(r0(in) == doctest::Approx(R0).epsilon(1e-15));

    const EstimateConstants k = finish_constants(in);
    CHECK(k.C_est == c_est(in));
    CHECK(k.R0 == r0(in));
    CHECK(k.N0 == std::ceil(k.R0) + 1.0);
    const double u = 1.0 * std::sqrt(2.0 * 0.5) * k.R0;
    CHECK(k.L1 == doctest::Approx(1.2 * 1.5 * 0.2 * u + 1.2 * 0.9).epsilon(1e-15));
    CHECK(k.L2 == doctest::Approx(1.5 * 0.3 * u + 1.1).epsilon(1e-15));
}

TEST_CASE("C_est is monotone in every coefficient bound") {
    const EstimateInputs base = sample_inputs();
    const double c = c_est(base);
    for (double EstimateInputs::*field : {&EstimateInputs::sup_g1, &EstimateInputs::sup_g2,
                                          &EstimateInputs::mu_inf, &EstimateInputs::m0_inf,
                                          &EstimateInputs::c_W0, &EstimateInputs::T,
                                          &EstimateInputs::a_plus}) {
        EstimateInputs in = base;
        in.*field *= 1.1;
        CHECK(c_est(in) > c);
    }
}

TEST_CASE("Lipschitz constants come from the rates when not given") {
    const Grid g = Grid::make_1d(0.5, 1.0, 8, 16, 1.0, 4);
    const VitalRates rates = logistic_rates(g, 1.0);
    EstimateInputs in = sample_inputs();
    in.L_muS_R0 = 0.0;
    in.L_m0_R0 = 0.0;
    const EstimateConstants k = finish_constants(in, &rates);
    CHECK(k.in.L_muS_R0 == rates.L_muS(k.R0));
    CHECK(k.in.L_m0_R0 == rates.L_m0(k.R0));
}

TEST_CASE("gradient norm of a linear profile") {
    const double L = 2.0;
    const Grid g = Grid::make_1d(1.0, 1.5, 6, 9, L, 8);
    const Field y = Field::from_function(g, [](double, Point x) { return x[0]; });
    const auto faces = boundary_faces(g);
    std::vector<double> alpha(faces.size() * g.age_nodes(), 0.0), k(alpha.size());
    for (int i = 0; i < g.age_nodes(); ++i)
        for (std::size_t q = 0; q < faces.size(); ++q)
            k[i * faces.size() + q] = faces[q].side == 0 ? 1.0 : -1.0;
    CHECK(grad_norm_sq(y, alpha, k) == doctest::Approx(g.a_plus * L).epsilon(1e-13));
    CHECK(grad_norm_sq(Field(g, 4.0), alpha, std::vector<double>(alpha.size(), 0.0)) == 0.0);
}

TEST_CASE("a-priori ratio is invariant under scaling of the data") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 6);
    const auto bundle = BrownianBundle::sample(3, 1, g.n_t, g.T);
    const Field init = random_field(g, 9, 0.0, 1.0);
    std::vector<double> ratios;
    for (double lambda : {1.0, 7.5, 1e-3}) {
        const Run r(g, constant_rates(g, 0.4, 1.1, 0.3, 0.2 * lambda), constant_noise(0.3), bundle,
                    init * lambda);
        const AprioriResult a = apriori_check(r.report, r.consts, boundary_history(r.coeffs));
        ratios.push_back(a.max_ratio);
        CHECK(a.passed);
    }
    CHECK(ratios[1] == doctest::Approx(ratios[0]).epsilon(1e-12));
    CHECK(ratios[2] == doctest::Approx(ratios[0]).epsilon(1e-12));
}

TEST_CASE("zero data gives a zero energy ratio") {
    const Grid g = Grid::make_1d(0.5, 1.0, 8, 16, 1.0, 4);
    const Run r(g, constant_rates(g, 0.4, 1.1), constant_noise(0.3),
                BrownianBundle::sample(1, 1, g.n_t, g.T), Field(g));
    const AprioriResult a = apriori_check(r.report, r.consts, boundary_history(r.coeffs));
    CHECK(a.max_ratio == 0.0);
    CHECK(a.passed);
}

TEST_CASE("dependence check: identical, symmetric, quadratic") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 6);
    const auto bundle = BrownianBundle::sample(5, 1, g.n_t, g.T);
    const auto rates = constant_rates(g, 0.4, 1.1, 0.3, 0.2);
    const Field init = random_field(g, 2, 0.5, 1.0);
    const Field h = random_field(g, 3, -1.0, 1.0);
    const Run base(g, rates, constant_noise(0.3), bundle, init);

    const DependenceResult same = dependence_check(base.dep(), base.dep());
    CHECK(same.energy_T == 0.0);
    CHECK(same.ratio == 0.0);

    const Run one(g, rates, constant_noise(0.3), bundle, init + h * 1e-3);
    const Run two(g, rates, constant_noise(0.3), bundle, init + h * 2e-3);
    const DependenceResult d1 = dependence_check(base.dep(), one.dep());
    const DependenceResult d1r = dependence_check(one.dep(), base.dep());
    const DependenceResult d2 = dependence_check(base.dep(), two.dep());
    CHECK(d1.energy_T == d1r.energy_T);
    CHECK(d1.ratio == d1r.ratio);
    CHECK(d2.energy_T / d1.energy_T == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d1.ratio <= 1.0);
    CHECK(d2.ratio <= 1.0);
}

TEST_CASE("dependence on the noise amplitude is bounded") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 6);
    const auto bundle = BrownianBundle::sample(6, 1, g.n_t, g.T);
    const auto rates = logistic_rates(g, 1.0);
    const Field init(g, 1.0);
    const Run a(g, rates, constant_noise(0.3), bundle, init);
    const Run b(g, rates, constant_noise(0.35), bundle, init);
    const DependenceResult d = dependence_check(a.dep(), b.dep());
    CHECK(d.energy_T > 0.0);
    CHECK(d.ratio <= 1.0);
}

TEST_CASE("weak residual: zero data, stride and stationary states") {
    const Grid g = Grid::make_1d(1.0, 1.0, 16, 16, 1.0, 4);
    const NoiseSpec none;
    const auto bundle = BrownianBundle::sample(1, 0, g.n_t, g.T);
    const VitalRates rates = constant_rates(g, 0.0, 1.0 / g.a_plus);
    const RescaledCoefficients coeffs(none, bundle, rates, g);

    const SolveReport zero = solve_random_pde(coeffs, rates, InitialData::from_field(Field(g)));
    CHECK(weak_residual(zero, rates, coeffs).max_abs == 0.0);
    CHECK(weak_residual_ito(zero, rates, none, bundle).max_abs == 0.0);

    const SolveReport flat = solve_random_pde(coeffs, rates, InitialData::from_field(Field(g, 3.0)));
    CHECK(weak_residual(flat, rates, coeffs).max_abs <= 1e-13);
    CHECK(weak_residual_ito(flat, rates, none, bundle).max_abs <= 1e-13);
    CHECK(weak_residual(flat, rates, coeffs, 4).residuals.size() == 4);
    CHECK_THROWS_AS(weak_residual(flat, rates, coeffs, 10), ConfigError);

    SolverConfig cfg;
    cfg.snapshot_stride = 4;
    const SolveReport sparse =
        solve_random_pde(coeffs, rates, InitialData::from_field(Field(g, 3.0)), cfg);
    CHECK_THROWS_AS(weak_residual(sparse, rates, coeffs), ConfigError);
    CHECK_THROWS_AS(weak_residual_ito(sparse, rates, none, bundle), ConfigError);
    CHECK_THROWS_AS(apriori_check(sparse, finish_constants({}), boundary_history(coeffs)),
                    ConfigError);
}

TEST_CASE("weak residual shrinks under refinement") {
    std::vector<double> res;
    for (int n : {16, 32, 64}) {
        const Grid g = Grid::make_1d(0.5, 1.0, n / 2, n, 1.0, n / 4);
        const auto rates = constant_rates(g, 0.4, 1.1, 0.3, 0.2);
        const NoiseSpec none;
        const RescaledCoefficients coeffs(none, BrownianBundle::sample(1, 0, g.n_t, g.T), rates, g);
        const InitialData p0 = InitialData::from_field(
            Field::from_function(g, [](double a, Point x) { return std::exp(-a) * (2.0 + x[0]); }));
        res.push_back(weak_residual(solve_random_pde(coeffs, rates, p0), rates, coeffs).max_abs);
    }
    CHECK(res[1] < res[0]);
    CHECK(res[2] < res[1]);
}
