#include "spde/noise.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace spde {

double SpatialFactor::value(double x) const {
    switch (kind) {
    case Kind::Cos: return std::cos(omega * x);
    case Kind::Sin: return std::sin(omega * x);
    default: return 1.0;
    }
}

double SpatialFactor::d1(double x) const {
    switch (kind) {
    case Kind::Cos: return -omega * std::sin(omega * x);
    case Kind::Sin: return omega * std::cos(omega * x);
    default: return 0.0;
    }
}

double SpatialFactor::d2(double x) const {
    return kind == Kind::One ? 0.0 : -omega * omega * value(x);
}

Amplitude Amplitude::constant(double c) { return age_polynomial({c}); }

Amplitude Amplitude::age_polynomial(std::vector<double> coeffs) {
    Amplitude a;
    a.age_poly = std::move(coeffs);
    return a;
}

Amplitude Amplitude::cosine_mode(double c, std::array<int, 2> modes, std::array<double, 2> extent) {
    Amplitude a;
    a.age_poly = {c};
    for (int k = 0; k < 2; ++k) {
        if (modes[k] != 0)
            a.space[k] = {SpatialFactor::Kind::Cos, modes[k] * std::numbers::pi / extent[k]};
    }
    return a;
}

double Amplitude::poly(double a) const {
    double v = 0.0;
    for (auto it = age_poly.rbegin(); it != age_poly.rend(); ++it)
        v = v * a + *it;
    return v;
}

double Amplitude::poly_d(double a) const {
    double v = 0.0;
    for (std::size_t k = age_poly.size(); k-- > 1;)
        v = v * a + static_cast<double>(k) * age_poly[k];
    return v;
}

double Amplitude::space_value(Point x) const { return space[0].value(x[0]) * space[1].value(x[1]); }

double Amplitude::value(double a, Point x) const { return poly(a) * space_value(x); }

double Amplitude::d_age(double a, Point x) const { return poly_d(a) * space_value(x); }

double Amplitude::d_space(int axis, double a, Point x) const {
    const int other = 1 - axis;
    return poly(a) * space[axis].d1(x[axis]) * space[other].value(x[other]);
}

double Amplitude::laplacian(int dim, double a, Point x) const {
    double lap = space[0].d2(x[0]) * space[1].value(x[1]);
    if (dim == 2)
        lap += space[0].value(x[0]) * space[1].d2(x[1]);
    return poly(a) * lap;
}

void NoiseSpec::check(const Grid& g) const {
    if (!neumann_compatible)
        return;
    const auto faces = boundary_faces(g);
    for (std::size_t j = 0; j < amplitudes.size(); ++j) {
        for (int i = 0; i < g.age_nodes(); ++i) {
            for (const Face& f : faces) {
                const double flux = amplitudes[j].d_space(f.axis, g.age(i), f.x);
                if (std::abs(flux) > 1e-12) {
                    std::ostringstream os;
                    os << "noise: amplitude " << j << " violates grad mu . nu = 0 (|flux|=" << flux
                       << ")";
                    throw ConfigError(os.str());
                }
            }
        }
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

BrownianBundle BrownianBundle::sample(std::uint64_t seed, int n_modes, int n_steps, double T) {
    if (n_steps < 2 || n_modes < 0 || !(T > 0.0))
        throw ConfigError("bundle: need n_steps >= 2, n_modes >= 0, T > 0");
    BrownianBundle b;
    b.modes_ = n_modes;
    b.steps_ = n_steps;
    b.T_ = T;
    b.seed_ = seed;
    b.inc_.resize(static_cast<std::size_t>(n_modes) * n_steps);
    b.nodes_.resize(static_cast<std::size_t>(n_modes) * (n_steps + 1));
    const double sd = std::sqrt(T / n_steps);
    for (int j = 0; j < n_modes; ++j) {
        std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(j)));
        std::normal_distribution<double> normal(0.0, 1.0);
        double beta = 0.0;
        b.nodes_[static_cast<std::size_t>(j) * (n_steps + 1)] = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            const double d = sd * normal(gen);
            b.inc_[b.idx(j, k)] = d;
            beta += d;
            b.nodes_[static_cast<std::size_t>(j) * (n_steps + 1) + k + 1] = beta;
        }
    }
    return b;
}

BrownianBundle BrownianBundle::from_raw(std::uint64_t seed, int n_modes, int n_steps, double T,
                                        int level, std::vector<double> increments,
                                        std::vector<double> nodes) {
    if (increments.size() != static_cast<std::size_t>(n_modes) * n_steps ||
        nodes.size() != static_cast<std::size_t>(n_modes) * (n_steps + 1))
        throw ConfigError("bundle: raw storage has the wrong size");
    BrownianBundle b;
    b.modes_ = n_modes;
    b.steps_ = n_steps;
    b.T_ = T;
    b.seed_ = seed;
    b.level_ = level;
    b.inc_ = std::move(increments);
    b.nodes_ = std::move(nodes);
    return b;
}

BrownianBundle BrownianBundle::coarsen(int factor) const {
    if (factor < 1 || !std::has_single_bit(static_cast<unsigned>(factor)) || steps_ % factor != 0)
        throw ConfigError("bundle: coarsening factor must be a power of two dividing n_t");
    if (factor == 1)
        return *this;
    BrownianBundle c;
    c.modes_ = modes_;
    c.steps_ = steps_ / factor;
    c.T_ = T_;
    c.seed_ = seed_;
    c.level_ = level_ + std::countr_zero(static_cast<unsigned>(factor));
    c.inc_.resize(static_cast<std::size_t>(modes_) * c.steps_);
    c.nodes_.resize(static_cast<std::size_t>(modes_) * (c.steps_ + 1));
    for (int j = 0; j < modes_; ++j) {
        for (int k = 0; k < c.steps_; ++k) {
            double s = 0.0;
            for (int q = 0; q < factor; ++q)
                s += increment(j, k * factor + q);
            c.inc_[c.idx(j, k)] = s;
        }
        for (int k = 0; k <= c.steps_; ++k)
            c.nodes_[static_cast<std::size_t>(j) * (c.steps_ + 1) + k] = beta(j, k * factor);
    }
    return c;
}

BrownianBundle BrownianBundle::zeroed() const {
    BrownianBundle z = *this;
    std::fill(z.inc_.begin(), z.inc_.end(), 0.0);
    std::fill(z.nodes_.begin(), z.nodes_.end(), 0.0);
    return z;
}

NoiseTables::NoiseTables(const NoiseSpec& spec, const Grid& g)
    : grid_(g), faces_(boundary_faces(g)), ito_(g) {
    for (const Amplitude& amp : spec.amplitudes) {
        mu_.push_back(Field::from_function(g, [&](double a, Point x) { return amp.value(a, x); }));
        mu_a_.push_back(Field::from_function(g, [&](double a, Point x) { return amp.d_age(a, x); }));
        lap_.push_back(
            Field::from_function(g, [&](double a, Point x) { return amp.laplacian(g.dim, a, x); }));
        std::array<Field, 2> grad{
            Field::from_function(g, [&](double a, Point x) { return amp.d_space(0, a, x); }),
            g.dim == 2 ? Field::from_function(g, [&](double a, Point x) { return amp.d_space(1, a, x); })
                       : Field(g)};
        grad_.push_back(std::move(grad));
        std::vector<double> bnd(static_cast<std::size_t>(g.age_nodes()) * faces_.size());
        for (int i = 0; i < g.age_nodes(); ++i)
            for (std::size_t f = 0; f < faces_.size(); ++f)
                bnd[i * faces_.size() + f] = amp.value(g.age(i), faces_[f].x);
        boundary_.push_back(std::move(bnd));
    }
    for (const Field& m : mu_)
        ito_ += hadamard(m, m);
    ito_ *= 0.5;
}

NoiseFields NoiseTables::fields(std::span<const double> beta) const {
    if (beta.size() != mu_.size())
        throw ConfigError("noise: beta count does not match amplitude count");
    NoiseFields out{Field(grid_), Field(grid_), {Field(grid_), Field(grid_)}, Field(grid_),
                    std::vector<double>(static_cast<std::size_t>(grid_.age_nodes()) * faces_.size(), 0.0)};
    for (std::size_t j = 0; j < mu_.size(); ++j) {
        const double b = beta[j];
        if (b == 0.0)
            continue;
        out.W += mu_[j] * b;
        out.W_a += mu_a_[j] * b;
        out.grad[0] += grad_[j][0] * b;
        out.grad[1] += grad_[j][1] * b;
        out.lap += lap_[j] * b;
        for (std::size_t k = 0; k < out.W_boundary.size(); ++k)
            out.W_boundary[k] += boundary_[j][k] * b;
    }
    return out;
}

NoiseFields NoiseTables::fields(const BrownianBundle& b, int t_index) const {
    std::vector<double> beta(mu_.size());
    for (std::size_t j = 0; j < mu_.size(); ++j)
        beta[j] = b.beta(static_cast<int>(j), t_index);
    return fields(beta);
}

Field NoiseTables::weighted_sum(std::span<const double> dbeta) const {
    Field out(grid_);
    for (std::size_t j = 0; j < mu_.size(); ++j)
        if (dbeta[j] != 0.0)
            out += mu_[j] * dbeta[j];
    return out;
}

NoiseFields eval_W(const NoiseSpec& spec, const BrownianBundle& b, const Grid& g, int t_index) {
    require_compatible(b, spec, g);
    return NoiseTables(spec, g).fields(b, t_index);
}

Field mu_field(const NoiseSpec& spec, const Grid& g) { return NoiseTables(spec, g).ito_correction(); }

void require_compatible(const BrownianBundle& b, const NoiseSpec& spec, const Grid& g) {
    if (b.modes() != spec.modes())
        throw ConfigError("noise: bundle mode count differs from amplitude count");
    if (b.steps() != g.n_t || std::abs(b.T() - g.T) > 1e-12 * g.T)
        throw ConfigError("noise: bundle time grid differs from the solver grid");
}

} // namespace spde
