#include "spde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spde/tridiagonal.hpp"

namespace spde {

Field transport_reaction_substep(const Field& y, const Field& g1, const Field& mu_S, double dt) {
    const Grid& g = y.grid();
    const int S = g.space_cells();
    Field out(g);
    if (g.aligned) {
        if (std::abs(dt - g.da()) > 1e-9 * g.da())
            throw ConfigError("transport: aligned mode requires dt == da");
        for (int i = 0; i < g.n_a; ++i)
            for (int s = 0; s < S; ++s)
                out(i + 1, s) = y(i, s) * std::exp(-(g1(i, s) + mu_S(i, s)) * dt);
        return out;
    }
    const double lambda = dt / g.da();
    if (lambda > 1.0 + 1e-12)
        throw ConfigError("transport: upwind mode requires dt <= da");
    for (int i = 1; i <= g.n_a; ++i)
        for (int s = 0; s < S; ++s)
            out(i, s) = ((1.0 - lambda) * y(i, s) + lambda * y(i - 1, s)) *
                        std::exp(-(g1(i, s) + mu_S(i, s)) * dt);
    return out;
}

std::vector<double> renewal_row(const Field& y, const Field& m) {
    const Grid& g = y.grid();
    std::vector<double> births(static_cast<std::size_t>(g.space_cells()), 0.0);
    for (int i = 0; i < g.age_nodes(); ++i) {
        const double w = g.age_weight(i);
        for (int s = 0; s < g.space_cells(); ++s)
            births[s] += w * m(i, s) * y(i, s);
    }
    return births;
}

void solve_renewal_row(Field& y, const Field& m) {
    const Grid& g = y.grid();
    const double w0 = g.age_weight(0);
    for (int s = 0; s < g.space_cells(); ++s) {
        double tail = 0.0;
        for (int i = 1; i < g.age_nodes(); ++i)
            tail += g.age_weight(i) * m(i, s) * y(i, s);
        const double denom = 1.0 - w0 * m(0, s);
        if (!(denom > 0.0)) {
            std::ostringstream os;
            os << "renewal: da * m(0)/2 = " << w0 * m(0, s) << " must stay below 1";
            throw ConfigError(os.str());
        }
        y(0, s) = tail / denom;
    }
}

DiffusionOperator::DiffusionOperator(const Grid& g) : grid_(g) {
    const auto faces = boundary_faces(g);
    n_faces_ = faces.size();
    // face lookup: [axis][side][cell]
    std::vector<int> lookup(static_cast<std::size_t>(4 * g.space_cells()), -1);
    for (std::size_t q = 0; q < faces.size(); ++q)
        lookup[(faces[q].axis * 2 + faces[q].side) * g.space_cells() + faces[q].cell] =
            static_cast<int>(q);

    for (int axis = 0; axis < g.dim; ++axis) {
        const int other = 1 - axis;
        const int n_lines = g.dim == 2 ? g.n_x[other] : 1;
        for (int l = 0; l < n_lines; ++l) {
            Line line{axis, {}, -1, -1};
            for (int j = 0; j < g.n_x[axis]; ++j) {
                std::array<int, 2> idx{0, 0};
                idx[axis] = j;
                idx[other] = l;
                line.cells.push_back(g.cell_index(idx));
            }
            line.face_lo = lookup[(axis * 2 + 0) * g.space_cells() + line.cells.front()];
            line.face_hi = lookup[(axis * 2 + 1) * g.space_cells() + line.cells.back()];
            lines_.push_back(std::move(line));
        }
    }
}

void DiffusionOperator::solve_age_row(int age, Field& y, std::span<const double> alpha,
                                      std::span<const double> k,
                                      const std::array<Field, 2>* drift, double dt,
                                      std::vector<double>& scratch) const {
    const std::size_t n_max = static_cast<std::size_t>(std::max(grid_.n_x[0], grid_.n_x[1]));
    scratch.resize(4 * n_max);
    auto row = y.row(age);
    const std::size_t face_base = static_cast<std::size_t>(age) * n_faces_;

    for (const Line& line : lines_) {
        const std::size_t n = line.cells.size();
        std::span<double> lower(scratch.data(), n);
        std::span<double> diag(scratch.data() + n_max, n);
        std::span<double> upper(scratch.data() + 2 * n_max, n);
        std::span<double> rhs(scratch.data() + 3 * n_max, n);
        const double h = grid_.dx(line.axis);
        const double r = dt / (h * h);

        for (std::size_t j = 0; j < n; ++j) {
            const int c = line.cells[j];
            const double v = drift ? (*drift)[line.axis](age, c) : 0.0;
            const double vp = std::max(v, 0.0);
            const double vm = std::min(v, 0.0);
            lower[j] = -r - dt * vp / h;
            upper[j] = -r + dt * vm / h;
            diag[j] = 1.0 + 2.0 * r + dt * vp / h - dt * vm / h;
            rhs[j] = row[c];
        }
        // Robin closure through the ghost value; the upwind difference that
        // reaches across a boundary face is replaced by the flux alpha y + k.
        {
            const std::size_t q = face_base + static_cast<std::size_t>(line.face_lo);
            const int c = line.cells.front();
            const double v = drift ? (*drift)[line.axis](age, c) : 0.0;
            const double vp = std::max(v, 0.0);
            diag[0] += -r - dt * vp / h + r * h * alpha[q] + dt * vp * alpha[q];
            rhs[0] -= r * h * k[q] + dt * vp * k[q];
            lower[0] = 0.0;
        }
        {
            const std::size_t q = face_base + static_cast<std::size_t>(line.face_hi);
            const int c = line.cells.back();
            const double v = drift ? (*drift)[line.axis](age, c) : 0.0;
            const double vm = std::min(v, 0.0);
            diag[n - 1] += -r + dt * vm / h + r * h * alpha[q] - dt * vm * alpha[q];
            rhs[n - 1] -= r * h * k[q] - dt * vm * k[q];
            upper[n - 1] = 0.0;
        }
        solve_tridiagonal(lower, diag, upper, rhs);
        for (std::size_t j = 0; j < n; ++j)
            row[line.cells[j]] = rhs[j];
    }
}

Field DiffusionOperator::apply(const Field& y, std::span<const double> alpha,
                               std::span<const double> k, const std::array<Field, 2>* drift,
                               double dt) const {
    Field out = y;
    const int ages = grid_.age_nodes();
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (int i = 0; i < ages; ++i)
            solve_age_row(i, out, alpha, k, drift, dt, scratch);
    }
    return out;
}

Field DiffusionOperator::apply_serial(const Field& y, std::span<const double> alpha,
                                      std::span<const double> k,
                                      const std::array<Field, 2>* drift, double dt) const {
    Field out = y;
    std::vector<double> scratch;
    for (int i = 0; i < grid_.age_nodes(); ++i)
        solve_age_row(i, out, alpha, k, drift, dt, scratch);
    return out;
}

Field diffusion_substep(const Field& y, std::span<const double> alpha, std::span<const double> k,
                        double dt, const std::array<Field, 2>* drift) {
    return DiffusionOperator(y.grid()).apply(y, alpha, k, drift, dt);
}

} // namespace spde
