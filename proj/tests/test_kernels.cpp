#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "spde/kernels.hpp"
#include "spde/tridiagonal.hpp"

using namespace spde;
using spde::testing::random_field;

namespace {

std::vector<double> boundary(const Grid& g, double v) {
    return std::vector<double>(boundary_faces(g).size() * g.age_nodes(), v);
}

double mass_row(const Field& y, int age) {
    double s = 0.0;
    for (double v : y.row(age))
        s += v;
    return s * y.grid().cell_volume();
}

} // namespace

TEST_CASE("tridiagonal solve matches a dense check") {
    std::vector<double> lo{0.0, -1.0, -0.5, -2.0}, d{4.0, 5.0, 3.0, 6.0}, up{-1.0, -2.0, -1.0, 0.0};
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
    std::vector<double> rhs(4);
    for (int i = 0; i < 4; ++i)
        rhs[i] = d[i] * x[i] + (i > 0 ? lo[i] * x[i - 1] : 0.0) + (i < 3 ? up[i] * x[i + 1] : 0.0);
    solve_tridiagonal(lo, d, up, rhs);
    for (int i = 0; i < 4; ++i)
        CHECK(rhs[i] == doctest::Approx(x[i]).epsilon(1e-14));

    std::vector<double> z{0.0, 0.0}, zd{0.0, 1.0}, zu{0.0, 0.0}, zr{1.0, 1.0};
    CHECK_THROWS_AS(solve_tridiagonal(z, zd, zu, zr), Error);
}

TEST_CASE("transport shifts one age cell") {
    const Grid g = Grid::make_1d(1.0, 1.0, 8, 8, 1.0, 3);
    Field y(g);
    for (int s = 0; s < 3; ++s)
        y(4, s) = 1.0;
    const Field out = transport_reaction_substep(y, Field(g), Field(g), g.dt());
    for (int i = 0; i < g.age_nodes(); ++i)
        for (int s = 0; s < 3; ++s)
            CHECK(out(i, s) == (i == 5 ? 1.0 : 0.0));
    CHECK(transport_reaction_substep(Field(g), Field(g), Field(g), g.dt()).max_abs() == 0.0);
    CHECK_THROWS_AS(transport_reaction_substep(y, Field(g), Field(g), 0.5 * g.dt()), ConfigError);
}

TEST_CASE("transport with constant decay follows characteristics") {
    const Grid g = Grid::make_1d(1.0, 2.0, 16, 32, 1.0, 1);
    const double c = 0.7;
    auto p0 = [](double a) { return std::exp(-a) * (1.0 + a); };
    Field y = Field::from_function(g, [&](double a, Point) { return p0(a); });
    const Field g1(g, 0.3), mu(g, 0.4);
    for (int n = 1; n <= g.n_t; ++n) {
        y = transport_reaction_substep(y, g1, mu, g.dt());
        const double t = g.time(n);
        for (int i = 0; i < g.age_nodes(); ++i) {
            const double a = g.age(i);
            const double expect = a < t - 1e-12 ? 0.0 : p0(a - t) * std::exp(-c * t);
            CHECK(std::abs(y(i, 0) - expect) <= 1e-13 * std::max(1.0, expect));
        }
    }
}

TEST_CASE("upwind transport in unaligned mode") {
    const Grid g = Grid::make_1d(0.25, 1.0, 8, 4, 1.0, 1, false);
    Field y = Field::from_function(g, [](double a, Point) { return a < 0.6 ? 1.0 : 0.0; });
    const Field out = transport_reaction_substep(y, Field(g), Field(g), g.dt());
    CHECK(out(0, 0) == 0.0);
    const double lambda = g.dt() / g.da();
    for (int i = 1; i < g.age_nodes(); ++i)
        CHECK(out(i, 0) == doctest::Approx((1 - lambda) * y(i, 0) + lambda * y(i - 1, 0)));
}

TEST_CASE("renewal row examples") {
    const Grid g = Grid::make_1d(1.0, 2.0, 40, 80, 1.0, 2);
    const auto rows = renewal_row(Field(g, 3.0), Field(g, 0.5));
    CHECK(rows[0] == doctest::Approx(0.5 * 3.0 * 2.0).epsilon(1e-14));
    CHECK(renewal_row(Field(g, 3.0), Field(g))[1] == 0.0);

    const double a1 = 0.5, a2 = 1.25;
    const Field m = Field::from_function(g, [&](double a, Point) {
        return a >= a1 - 1e-12 && a <= a2 + 1e-12 ? 1.0 : 0.0;
    });
    CHECK(renewal_row(Field(g, 1.0), m)[0] == doctest::Approx(a2 - a1).epsilon(g.da()));
}

TEST_CASE("renewal row solve is self-consistent") {
    const Grid g = Grid::make_1d(1.0, 1.0, 8, 8, 1.0, 3);
    Field y = random_field(g, 4, 0.0, 1.0);
    const Field m = random_field(g, 5, 0.0, 2.0);
    solve_renewal_row(y, m);
    const auto rows = renewal_row(y, m);
    for (int s = 0; s < 3; ++s)
        CHECK(y(0, s) == doctest::Approx(rows[s]).epsilon(1e-14));

    const Grid coarse = Grid::make_1d(1.0, 1.0, 2, 2, 1.0, 1);
    Field z(coarse, 1.0);
    CHECK_THROWS_AS(solve_renewal_row(z, Field(coarse, 4.0)), ConfigError);
}

TEST_CASE("Neumann diffusion preserves constants") {
    const Grid g1 = Grid::make_1d(1.0, 1.0, 4, 4, 1.0, 9);
    const Field c1(g1, 2.5);
    const Field out1 = diffusion_substep(c1, boundary(g1, 0.0), boundary(g1, 0.0), 0.1);
    CHECK((out1 - c1).max_abs() <= 1e-14);

    const Grid g2 = Grid::make_2d(1.0, 1.0, 4, 4, {1.0, 2.0}, {5, 7});
    const Field c2(g2, -1.5);
    const Field out2 = diffusion_substep(c2, boundary(g2, 0.0), boundary(g2, 0.0), 0.3);
    CHECK((out2 - c2).max_abs() <= 1e-14);
}

TEST_CASE("cosine mode decays by the discrete Neumann eigenvalue") {
    const double L = 2.0;
    const int n = 16;
    const Grid g = Grid::make_1d(1.0, 1.0, 4, 4, L, n);
    const double dx = g.dx(0), dt = 0.05;
    Field y = Field::from_function(g, [&](double, Point x) { return std::cos(std::numbers::pi * x[0] / L); });
    const Field y0 = y;
    const double factor =
        1.0 / (1.0 + dt * (2.0 / (dx * dx)) * (1.0 - std::cos(std::numbers::pi * dx / L)));
    const auto zero = boundary(g, 0.0);
    const DiffusionOperator op(g);
    for (int step = 1; step <= 5; ++step) {
        y = op.apply(y, zero, zero, nullptr, dt);
        const Field expect = y0 * std::pow(factor, step);
        CHECK((y - expect).max_abs() <= 1e-13);
    }
}

TEST_CASE("Robin flux changes mass by the boundary data") {
    const Grid g = Grid::make_2d(1.0, 1.0, 4, 4, {1.0, 1.5}, {4, 6});
    const Field y = random_field(g, 8, 0.0, 2.0);
    const double k = 0.3, dt = 0.02;
    const Field out = diffusion_substep(y, boundary(g, 0.0), boundary(g, k), dt);
    double perimeter = 0.0;
    for (const Face& f : boundary_faces(g))
        perimeter += f.area;
    // With alternating sweeps each axis removes its own boundary flux.
    for (int i = 0; i < g.age_nodes(); ++i)
        CHECK(mass_row(out, i) == doctest::Approx(mass_row(y, i) - dt * k * perimeter).epsilon(1e-12));
}

TEST_CASE("larger alpha lowers the boundary cells") {
    const Grid g = Grid::make_1d(1.0, 1.0, 4, 4, 1.0, 10);
    const Field y(g, 1.0);
    const auto zero = boundary(g, 0.0);
    const Field free = diffusion_substep(y, zero, zero, 0.01);
    const Field damped = diffusion_substep(y, boundary(g, 50.0), zero, 0.01);
    for (int i = 0; i < g.age_nodes(); ++i) {
        CHECK(damped(i, 0) < free(i, 0));
        CHECK(damped(i, 9) < free(i, 9));
        for (int s = 0; s < 10; ++s)
            CHECK(damped(i, s) <= free(i, s));
    }
}

TEST_CASE("implicit diffusion with drift keeps nonnegative data nonnegative") {
    const Grid g = Grid::make_2d(1.0, 1.0, 4, 4, {1.0, 1.0}, {6, 5});
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const Field y = random_field(g, seed, 0.0, 1.0);
        const std::array<Field, 2> drift{random_field(g, seed + 100, -30.0, 30.0),
                                         random_field(g, seed + 200, -30.0, 30.0)};
        std::vector<double> alpha = boundary(g, 0.0);
        for (std::size_t q = 0; q < alpha.size(); ++q)
            alpha[q] = 0.1 * static_cast<double>(q % 7);
        const DiffusionOperator op(g);
        const Field out = op.apply(y, alpha, boundary(g, 0.0), &drift, 0.1);
        CHECK(out.min() >= 0.0);
    }
}

TEST_CASE("parallel and serial diffusion agree bit for bit") {
    const Grid g = Grid::make_2d(1.0, 1.0, 16, 16, {1.0, 2.0}, {12, 9});
    const Field y = random_field(g, 77);
    const std::array<Field, 2> drift{random_field(g, 78), random_field(g, 79)};
    std::vector<double> alpha = boundary(g, 0.2), k = boundary(g, 0.0);
    for (std::size_t q = 0; q < k.size(); ++q)
        k[q] = std::sin(static_cast<double>(q));
    const DiffusionOperator op(g);
    const Field par = op.apply(y, alpha, k, &drift, 0.05);
    const Field ser = op.apply_serial(y, alpha, k, &drift, 0.05);
    for (std::size_t q = 0; q < par.size(); ++q)
        CHECK(par.values()[q] == ser.values()[q]);
}
