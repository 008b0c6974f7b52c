#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "spde/estimates.hpp"
#include "spde/pde_solver.hpp"

using namespace spde;
using spde::testing::constant_noise;
using spde::testing::constant_rates;
using spde::testing::logistic_rates;
using spde::testing::random_field;

TEST_CASE("truncation branches") {
    const Grid g = Grid::make_1d(1.0, 1.0, 4, 4, 1.0, 3);
    const Field u = random_field(g, 1);
    const double n = h_norm(u);

    TruncationGuard inside{2.0 * n, 0.0, 0};
    const Truncation a = truncate(u, inside);
    CHECK_FALSE(a.active);
    CHECK(a.scale == 1.0);
    CHECK(inside.activations == 0);
    CHECK((a.argument - u).max_abs() == 0.0);

    TruncationGuard outside{0.5 * n, 0.0, 0};
    const Truncation b = truncate(u, outside);
    CHECK(b.active);
    CHECK(b.scale == doctest::Approx(0.5));
    CHECK(outside.activations == 1);
    CHECK(h_norm(b.argument) == doctest::Approx(0.5 * n));

    TruncationGuard edge{n, 0.0, 0};
    const Truncation c = truncate(u, edge);
    TruncationGuard just_below{n * (1.0 - 1e-15), 0.0, 0};
    const Truncation d = truncate(u, just_below);
    CHECK((c.argument - d.argument).max_abs() <= 1e-14);
    CHECK(c.scale == doctest::Approx(d.scale));
}

TEST_CASE("characteristics oracle without noise, diffusion or births") {
    const Grid g = Grid::make_1d(0.5, 1.0, 32, 64, 1.0, 1);
    const double mu = 0.8;
    const auto rates = constant_rates(g, mu, 0.0);
    const InitialData p0 = InitialData::from_field(
        Field::from_function(g, [](double a, Point) { return std::exp(-a); }));
    const SolveReport r =
        solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T), rates, p0);
    for (std::size_t q = 0; q < r.stored_levels.size(); ++q) {
        const double t = g.time(r.stored_levels[q]);
        for (int i = 0; i < g.age_nodes(); ++i) {
            const double a = g.age(i);
            const double exact = a < t - 1e-12 ? 0.0 : std::exp(-(a - t)) * std::exp(-mu * t);
            CHECK(std::abs(r.y[q](i, 0) - exact) <= 1e-12 * std::max(exact, 1e-300) + 1e-300);
        }
    }
}

TEST_CASE("births follow the scalar renewal recursion") {
    const Grid g = Grid::make_1d(2.0, 1.0, 40, 20, 1.0, 1);
    const double m = 1.3;
    const auto rates = constant_rates(g, 0.0, m);
    auto p0 = [](double a) { return 1.0 + a * (1.0 - a); };
    const InitialData init =
        InitialData::from_field(Field::from_function(g, [&](double a, Point) { return p0(a); }));
    const SolveReport r =
        solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T), rates, init);

    // Cohort bookkeeping: age node i at step n was born at step n - i, or
    // belongs to the initial population when i > n.
    std::vector<double> B(g.n_t + 1, 0.0);
    B[0] = p0(0.0);
    const double w0 = 0.5 * g.da();
    for (int n = 1; n <= g.n_t; ++n) {
        double tail = 0.0;
        for (int i = 1; i <= g.n_a; ++i) {
            const double w = i == g.n_a ? 0.5 * g.da() : g.da();
            const double u = i <= n ? B[n - i] : p0(g.age(i - n));
            tail += w * m * u;
        }
        B[n] = tail / (1.0 - w0 * m);
    }
    for (int n = 1; n <= g.n_t; ++n)
        CHECK(r.births[n] == doctest::Approx(B[n]).epsilon(1e-12));
}

TEST_CASE("linear model converges after one update on every step") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 8);
    const auto rates = constant_rates(g, 0.3, 1.2, 0.5, 0.1);
    const InitialData p0 = InitialData::from_field(random_field(g, 2, 0.0, 1.0));
    const SolveReport r =
        solve_random_pde(constant_noise(0.3), BrownianBundle::sample(9, 1, g.n_t, g.T), rates, p0);
    CHECK(r.picard_iterations.size() == static_cast<std::size_t>(g.n_t));
    for (int it : r.picard_iterations)
        CHECK(it == 1);
}

TEST_CASE("infinite tolerance returns the first iterate") {
    const Grid g = Grid::make_1d(0.5, 1.0, 8, 16, 1.0, 4);
    SolverConfig cfg;
    cfg.tol = std::numeric_limits<double>::infinity();
    const SolveReport r = solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T),
                                           logistic_rates(g, 1.0),
                                           InitialData::from_field(Field(g, 1.0)), cfg);
    for (int it : r.picard_iterations)
        CHECK(it == 0);
}

TEST_CASE("logistic model contracts") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 8);
    const SolveReport r =
        solve_random_pde(constant_noise(0.2), BrownianBundle::sample(4, 1, g.n_t, g.T),
                         logistic_rates(g, 1.0), InitialData::from_field(Field(g, 1.0)));
    for (std::size_t n = 0; n < r.picard_iterations.size(); ++n) {
        CHECK(r.picard_iterations[n] >= 1);
        CHECK(r.picard_iterations[n] <= 10);
        CHECK(r.contraction[n] < 1.0);
    }
    CHECK(r.truncation_activations == 0);
}

TEST_CASE("iteration cap raises a nonconvergence error") {
    const Grid g = Grid::make_1d(0.5, 1.0, 8, 16, 1.0, 4);
    SolverConfig cfg;
    cfg.max_iter = 1;
    cfg.tol = 1e-15;
    try {
        solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T),
                         logistic_rates(g, 1.0), InitialData::from_field(Field(g, 1.0)), cfg);
        FAIL("expected nonconvergence");
    } catch (const NonConvergenceError& e) {
        CHECK(e.step() == 0);
        CHECK(e.last_ratio() > 0.0);
    }
}

TEST_CASE("positivity of the rescaled solution") {
    const Grid g = Grid::make_2d(0.5, 1.0, 16, 32, {1.0, 1.0}, {5, 4});
    NoiseSpec spec = constant_noise(0.4);
    spec.amplitudes.push_back(Amplitude::cosine_mode(0.5, {1, 1}, g.extent));
    VitalRates rates = logistic_rates(g, 0.5);
    rates.alpha0 = [](double, double a, Point) { return 1.0 + a; };
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const InitialData p0 = InitialData::from_field(random_field(g, seed, 0.0, 2.0));
        REQUIRE(p0.nonnegative);
        const SolveReport r =
            solve_random_pde(spec, BrownianBundle::sample(seed, 2, g.n_t, g.T), rates, p0);
        for (const Field& y : r.y)
            CHECK(y.min() >= 0.0);
        for (const Field& p : r.p)
            CHECK(p.min() >= 0.0);
    }
}

TEST_CASE("zero amplitudes make the output independent of the path") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 6);
    NoiseSpec spec = constant_noise(0.0);
    spec.amplitudes.push_back(Amplitude::cosine_mode(0.0, {1, 0}, g.extent));
    const auto rates = logistic_rates(g, 1.0);
    const InitialData p0 = InitialData::from_field(random_field(g, 3, 0.0, 1.0));
    const SolveReport a = solve_random_pde(spec, BrownianBundle::sample(1, 2, g.n_t, g.T), rates, p0);
    const SolveReport b = solve_random_pde(spec, BrownianBundle::sample(2, 2, g.n_t, g.T), rates, p0);
    REQUIRE(a.p.size() == b.p.size());
    for (std::size_t q = 0; q < a.p.size(); ++q)
        for (std::size_t k = 0; k < a.p[q].size(); ++k)
            REQUIRE(a.p[q].values()[k] == b.p[q].values()[k]);
}

TEST_CASE("truncation stays off at N0 and engages far below it") {
    const Grid g = Grid::make_1d(0.5, 1.0, 16, 32, 1.0, 6);
    const NoiseSpec spec = constant_noise(0.2);
    const auto bundle = BrownianBundle::sample(5, 1, g.n_t, g.T);
    const auto rates = logistic_rates(g, 1.0);
    const InitialData p0 = InitialData::from_field(Field(g, 1.0));
    const SolveReport r = solve_random_pde(spec, bundle, rates, p0);
    CHECK(r.truncation_activations == 0);
    CHECK(r.truncation_threshold >= 2.0);
    CHECK(r.truncation_radius == r.truncation_threshold);
    for (double h : r.h_norm_y)
        CHECK(h * h <= r.truncation_threshold);

    SolverConfig cfg;
    cfg.truncation_radius = r.truncation_threshold / 100.0;
    const SolveReport clipped = solve_random_pde(spec, bundle, rates, p0, cfg);
    CHECK(clipped.truncation_activations > 0);
}

TEST_CASE("snapshot stride") {
    const Grid g = Grid::make_1d(0.5, 1.0, 10, 20, 1.0, 2);
    SolverConfig cfg;
    cfg.snapshot_stride = 4;
    const SolveReport r = solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T),
                                           constant_rates(g, 0.1, 0.5),
                                           InitialData::from_field(Field(g, 1.0)), cfg);
    CHECK(r.stored_levels == std::vector<int>{0, 4, 8, 10});
    CHECK_FALSE(r.full_stride());
    CHECK(r.times.size() == 11);
    cfg.snapshot_stride = 0;
    CHECK_THROWS_AS(solve_random_pde(NoiseSpec{}, BrownianBundle::sample(1, 0, g.n_t, g.T),
                                     constant_rates(g, 0.1, 0.5),
                                     InitialData::from_field(Field(g, 1.0)), cfg),
                    ConfigError);
}
