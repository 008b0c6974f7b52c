#include "spde/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spde {

namespace {

constexpr double kAlignTol = 1e-9;

bool is_multiple(double value, double step) {
    const double q = value / step;
    return std::abs(q - std::round(q)) <= kAlignTol * std::max(1.0, std::abs(q));
}

} // namespace

Grid Grid::make_1d(double T, double a_plus, int n_t, int n_a, double length, int n_x,
                   bool aligned) {
    Grid g;
    g.T = T;
    g.a_plus = a_plus;
    g.n_t = n_t;
    g.n_a = n_a;
    g.dim = 1;
    g.extent = {length, 1.0};
    g.n_x = {n_x, 1};
    g.aligned = aligned;
    g.validate();
    return g;
}

Grid Grid::make_2d(double T, double a_plus, int n_t, int n_a, std::array<double, 2> extent,
                   std::array<int, 2> n_x, bool aligned) {
    Grid g;
    g.T = T;
    g.a_plus = a_plus;
    g.n_t = n_t;
    g.n_a = n_a;
    g.dim = 2;
    g.extent = extent;
    g.n_x = n_x;
    g.aligned = aligned;
    g.validate();
    return g;
}

void Grid::validate() const {
    if (!(T > 0.0) || !(a_plus > 0.0))
        throw ConfigError("grid: T and a_plus must be positive");
    if (n_t < 2 || n_a < 2)
        throw ConfigError("grid: n_t and n_a must be at least 2");
    if (dim != 1 && dim != 2)
        throw ConfigError("grid: dim must be 1 or 2");
    for (int k = 0; k < dim; ++k) {
        if (!(extent[k] > 0.0))
            throw ConfigError("grid: spatial extent must be positive");
        if (n_x[k] < 1)
            throw ConfigError("grid: need at least one cell per dimension");
    }
    if (aligned && std::abs(dt() - da()) > kAlignTol * da()) {
        std::ostringstream os;
        os << "grid: characteristic alignment needs dt == da (dt=" << dt() << ", da=" << da()
           << ")";
        throw ConfigError(os.str());
    }
    if (!aligned && dt() > da() * (1.0 + kAlignTol))
        throw ConfigError("grid: upwind age transport needs dt <= da");
}

Point Grid::cell_center(int s) const {
    const auto idx = cell_multi_index(s);
    Point p{(idx[0] + 0.5) * dx(0), 0.0};
    if (dim == 2)
        p[1] = (idx[1] + 0.5) * dx(1);
    return p;
}

std::vector<Face> boundary_faces(const Grid& g) {
    std::vector<Face> faces;
    for (int axis = 0; axis < g.dim; ++axis) {
        for (int side = 0; side < 2; ++side) {
            for (int s = 0; s < g.space_cells(); ++s) {
                const auto idx = g.cell_multi_index(s);
                const int edge = side == 0 ? 0 : g.n_x[axis] - 1;
                if (idx[axis] != edge)
                    continue;
                Point x = g.cell_center(s);
                x[axis] = side == 0 ? 0.0 : g.extent[axis];
                const double area = g.dim == 2 ? g.dx(1 - axis) : 1.0;
                faces.push_back({s, axis, side, x, area});
            }
        }
    }
    return faces;
}

Field::Field(const Grid& g, double fill) : grid_(g), values_(g.size(), fill) {}

Field::Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != g.size())
        throw ConfigError("field: value count does not match grid");
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Field::require_finite(const char* context) const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            const auto S = static_cast<std::size_t>(grid_.space_cells());
            std::ostringstream os;
            os << context << ": non-finite entry at age node " << k / S << ", cell " << k % S;
            throw InvalidFieldError(os.str());
        }
    }
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_)
        m = std::max(m, std::abs(v));
    return m;
}

void Field::require_same_grid(const Field& o) const {
    if (!(grid_ == o.grid_))
        throw ConfigError("field: grid mismatch");
}

Field& Field::operator+=(const Field& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
        values_[k] += o.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
        values_[k] -= o.values_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_)
        v *= s;
    return *this;
}

Field hadamard(Field a, const Field& b) {
    a.require_same_grid(b);
    for (std::size_t k = 0; k < a.values_.size(); ++k)
        a.values_[k] *= b.values_[k];
    return a;
}

double h_norm(const Field& f) {
    f.require_finite("h_norm");
    const Grid& g = f.grid();
    const double big = f.max_abs();
    if (big == 0.0)
        return 0.0;
    // power-of-two rescaling keeps tiny and huge fields representable
    int e = 0;
    std::frexp(big, &e);
    double sum = 0.0;
    for (int i = 0; i < g.age_nodes(); ++i) {
        double row = 0.0;
        for (double v : f.row(i)) {
            const double u = std::ldexp(v, -e);
            row += u * u;
        }
        sum += g.age_weight(i) * row;
    }
    return std::ldexp(std::sqrt(sum * g.cell_volume()), e);
}

double integral(const Field& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (int i = 0; i < g.age_nodes(); ++i) {
        double row = 0.0;
        for (double v : f.row(i))
            row += v;
        sum += g.age_weight(i) * row;
    }
    return sum * g.cell_volume();
}

std::vector<int> Region::cells(const Grid& g) const {
    for (int k = 0; k < g.dim; ++k) {
        if (!is_multiple(lo[k], g.dx(k)) || !is_multiple(hi[k], g.dx(k)))
            throw ConfigError("region: O_U is not aligned with the spatial grid");
        if (lo[k] < -kAlignTol || hi[k] > g.extent[k] * (1.0 + kAlignTol) || !(hi[k] > lo[k]))
            throw ConfigError("region: O_U must be a non-empty sub-box of O");
    }
    std::vector<int> out;
    for (int s = 0; s < g.space_cells(); ++s) {
        const Point c = g.cell_center(s);
        bool inside = true;
        for (int k = 0; k < g.dim; ++k)
            inside = inside && c[k] > lo[k] && c[k] < hi[k];
        if (inside)
            out.push_back(s);
    }
    return out;
}

double u_functional(const Field& f, const AgeSpaceFn& gamma, const Region& region) {
    return UWeights(f.grid(), gamma, region).apply(f);
}

UWeights::UWeights(const Grid& g, const AgeSpaceFn& gamma, const Region& region)
    : cells_(region.cells(g)), ages_(g.age_nodes()), stride_(g.space_cells()) {
    w_.reserve(static_cast<std::size_t>(ages_) * cells_.size());
    for (int i = 0; i < ages_; ++i) {
        for (int s : cells_) {
            const double w = g.age_weight(i) * g.cell_volume() * gamma(g.age(i), g.cell_center(s));
            zero_ = zero_ && w == 0.0;
            w_.push_back(w);
        }
    }
}

double UWeights::apply(const Field& f) const {
    double sum = 0.0;
    std::size_t k = 0;
    const auto v = f.values();
    for (int i = 0; i < ages_; ++i)
        for (int s : cells_)
            sum += w_[k++] * v[static_cast<std::size_t>(i) * stride_ + s];
    return sum;
}

double UWeights::apply_scaled(const Field& f, const Field& expw) const {
    double sum = 0.0;
    std::size_t k = 0;
    const auto v = f.values();
    const auto e = expw.values();
    for (int i = 0; i < ages_; ++i) {
        for (int s : cells_) {
            const std::size_t at = static_cast<std::size_t>(i) * stride_ + s;
            sum += w_[k++] * e[at] * v[at];
        }
    }
    return sum;
}

double RateFamily::operator()(double r) const {
    if (slope == 0.0)
        return lo;
    return lo + (hi - lo) / (1.0 + std::exp(-slope * (r - midpoint)));
}

double RateFamily::sup() const { return slope == 0.0 ? lo : std::max(lo, hi); }

double RateFamily::lipschitz() const { return std::abs((hi - lo) * slope) / 4.0; }

double AgeTable::operator()(double a) const {
    if (ages.empty())
        return 1.0;
    if (a <= ages.front())
        return values.front();
    if (a >= ages.back())
        return values.back();
    const auto it = std::upper_bound(ages.begin(), ages.end(), a);
    const auto k = static_cast<std::size_t>(it - ages.begin());
    const double w = (a - ages[k - 1]) / (ages[k] - ages[k - 1]);
    return (1.0 - w) * values[k - 1] + w * values[k];
}

double AgeTable::sup() const {
    return ages.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
}

VitalRates make_separable_rates(const RateFamily& mu_S, const AgeTable& mu_S_age,
                                const RateFamily& m0, const AgeTable& m0_age, double gamma,
                                double alpha0, double k0, const Region& u_region) {
    if (mu_S_age.ages.size() != mu_S_age.values.size() || m0_age.ages.size() != m0_age.values.size())
        throw ConfigError("rates: age table sizes differ");
    VitalRates v;
    v.mu_S = [mu_S, mu_S_age](double, double a, Point, double r) { return mu_S_age(a) * mu_S(r); };
    v.m0 = [m0, m0_age](double a, Point, double r) { return m0_age(a) * m0(r); };
    v.gamma = [gamma](double, Point) { return gamma; };
    v.alpha0 = [alpha0](double, double, Point) { return alpha0; };
    v.k0 = [k0](double, double, Point) { return k0; };
    v.mu_inf = mu_S_age.sup() * mu_S.sup();
    v.m0_inf = m0_age.sup() * m0.sup();
    v.gamma_inf = std::abs(gamma);
    const double lmu = mu_S_age.sup() * mu_S.lipschitz();
    const double lm = m0_age.sup() * m0.lipschitz();
    v.L_muS = [lmu](double) { return lmu; };
    v.L_m0 = [lm](double) { return lm; };
    v.u_region = u_region;
    return v;
}

InitialData InitialData::from_field(Field p0) {
    p0.require_finite("initial data");
    InitialData d{std::move(p0), false};
    d.nonnegative = d.p0.min() >= 0.0;
    return d;
}

RateValidation validate_rates(const VitalRates& v, const Grid& g, int sample_budget,
                              double r_max) {
    RateValidation rep;
    constexpr int kLattice = 33;
    const int budget = std::max(1, sample_budget);
    std::vector<double> rs(kLattice);
    for (int k = 0; k < kLattice; ++k)
        rs[k] = -r_max + 2.0 * r_max * k / (kLattice - 1);

    // Evenly strided (t, a, x) samples.
    const long long total = static_cast<long long>(g.n_t + 1) * g.age_nodes() * g.space_cells();
    const long long stride = std::max<long long>(1, total / budget);
    auto report = [&](std::string what, double t, double a, Point x, double r) {
        rep.passed = false;
        rep.violations.push_back({std::move(what), t, a, r, x});
    };

    for (long long flat = 0; flat < total && rep.samples < budget; flat += stride) {
        const int s = static_cast<int>(flat % g.space_cells());
        const int i = static_cast<int>((flat / g.space_cells()) % g.age_nodes());
        const int n = static_cast<int>(flat / (static_cast<long long>(g.space_cells()) * g.age_nodes()));
        const double t = g.time(n);
        const double a = g.age(i);
        const Point x = g.cell_center(s);
        ++rep.samples;
        const std::size_t at_start = rep.violations.size();

        std::vector<double> mu(kLattice), m(kLattice);
        for (int k = 0; k < kLattice; ++k) {
            mu[k] = v.mu_S(t, a, x, rs[k]);
            m[k] = v.m0(a, x, rs[k]);
            if (!(mu[k] >= 0.0 && mu[k] <= v.mu_inf))
                report("mu_S outside [0, mu_inf]", t, a, x, rs[k]);
            if (!(m[k] >= 0.0 && m[k] <= v.m0_inf))
                report("m0 outside [0, m0_inf]", t, a, x, rs[k]);
        }
        for (int k = 0; k + 1 < kLattice; ++k) {
            const double R = std::max(std::abs(rs[k]), std::abs(rs[k + 1]));
            const double dr = rs[k + 1] - rs[k];
            const double slack = 1.0 + 1e-12;
            if (v.L_muS && std::abs(mu[k + 1] - mu[k]) > v.L_muS(R) * dr * slack + 1e-15)
                report("mu_S exceeds declared Lipschitz constant", t, a, x, rs[k]);
            if (v.L_m0 && std::abs(m[k + 1] - m[k]) > v.L_m0(R) * dr * slack + 1e-15)
                report("m0 exceeds declared Lipschitz constant", t, a, x, rs[k]);
        }
        const double gam = v.gamma(a, x);
        if (!(gam >= 0.0 && gam <= v.gamma_inf))
            report("gamma outside [0, gamma_inf]", t, a, x, 0.0);
        if (!(v.alpha0(t, a, x) >= 0.0))
            report("alpha0 negative", t, a, x, 0.0);
        if (rep.violations.size() > at_start)
            ++rep.violating_samples;
    }
    return rep;
}

} // namespace spde
