#include "spde/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace spde {

using nlohmann::json;

namespace {

template <class T>
T value_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null())
        return fallback;
    return j.at(key).get<T>();
}

const json& section(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_object())
        throw ConfigError(std::string("model: missing section '") + key + "'");
    return j.at(key);
}

Grid parse_grid(const json& j) {
    const int dim = value_or(j, "dim", 1);
    Grid g;
    g.T = j.at("T").get<double>();
    g.a_plus = j.at("a_plus").get<double>();
    g.n_t = j.at("n_t").get<int>();
    g.n_a = j.at("n_a").get<int>();
    g.dim = dim;
    g.aligned = value_or(j, "aligned", true);
    const auto extent = j.at("extent").get<std::vector<double>>();
    const auto n_x = j.at("n_x").get<std::vector<int>>();
    if (static_cast<int>(extent.size()) != dim || static_cast<int>(n_x.size()) != dim)
        throw ConfigError("model: grid extent and n_x need one entry per dimension");
    for (int k = 0; k < dim; ++k) {
        g.extent[k] = extent[k];
        g.n_x[k] = n_x[k];
    }
    g.validate();
    return g;
}

RateFamily parse_family(const json& j) {
    const auto kind = j.at("family").get<std::string>();
    if (kind == "constant")
        return RateFamily::constant(j.at("value").get<double>());
    if (kind == "logistic")
        return RateFamily::logistic(j.at("lo").get<double>(), j.at("hi").get<double>(),
                                    j.at("slope").get<double>(), j.at("midpoint").get<double>());
    throw ConfigError("model: unknown rate family '" + kind + "'");
}

AgeTable parse_table(const json& j, const char* key) {
    AgeTable t;
    if (!j.contains(key))
        return t;
    t.ages = j.at(key).at("ages").get<std::vector<double>>();
    t.values = j.at(key).at("values").get<std::vector<double>>();
    return t;
}

Region parse_region(const json& j, const Grid& g) {
    if (!j.contains("u_region"))
        return Region::whole(g);
    const auto lo = j.at("u_region").at("lo").get<std::vector<double>>();
    const auto hi = j.at("u_region").at("hi").get<std::vector<double>>();
    if (static_cast<int>(lo.size()) != g.dim || static_cast<int>(hi.size()) != g.dim)
        throw ConfigError("model: u_region needs one bound per dimension");
    Region r = Region::whole(g);
    for (int k = 0; k < g.dim; ++k) {
        r.lo[k] = lo[k];
        r.hi[k] = hi[k];
    }
    r.cells(g);
    return r;
}

VitalRates parse_rates(const json& j, const Grid& g) {
    return make_separable_rates(parse_family(j.at("mu_S")), parse_table(j, "mu_S_age"),
                                parse_family(j.at("m0")), parse_table(j, "m0_age"),
                                value_or(j, "gamma", 0.0), value_or(j, "alpha0", 0.0),
                                value_or(j, "k0", 0.0), parse_region(j, g));
}

Amplitude parse_amplitude(const json& j, const Grid& g) {
    const auto type = j.at("type").get<std::string>();
    if (type == "constant")
        return Amplitude::constant(j.at("c").get<double>());
    if (type == "age_polynomial")
        return Amplitude::age_polynomial(j.at("coeffs").get<std::vector<double>>());
    if (type == "cosine") {
        const auto modes = j.at("modes").get<std::vector<int>>();
        std::array<int, 2> m{0, 0};
        for (std::size_t k = 0; k < modes.size() && k < 2; ++k)
            m[k] = modes[k];
        return Amplitude::cosine_mode(j.at("c").get<double>(), m, g.extent);
    }
    throw ConfigError("model: unknown amplitude type '" + type + "'");
}

NoiseSpec parse_noise(const json& j, const Grid& g) {
    NoiseSpec spec;
    spec.neumann_compatible = value_or(j, "neumann_compatible", true);
    if (j.contains("amplitudes"))
        for (const auto& a : j.at("amplitudes"))
            spec.amplitudes.push_back(parse_amplitude(a, g));
    spec.check(g);
    return spec;
}

SolverConfig parse_solver(const json& j) {
    SolverConfig c;
    c.tol = value_or(j, "tol", c.tol);
    c.max_iter = value_or(j, "max_iter", c.max_iter);
    if (j.contains("truncation_radius") && !j.at("truncation_radius").is_null())
        c.truncation_radius = j.at("truncation_radius").get<double>();
    c.snapshot_stride = value_or(j, "snapshot_stride", c.snapshot_stride);
    c.c0 = value_or(j, "c0", c.c0);
    c.c1 = value_or(j, "c1", c.c1);
    if (!(c.tol >= 0.0) || c.max_iter < 0 || c.snapshot_stride < 1 || !(c.c0 > 0.0) ||
        !(c.c1 > 0.0))
        throw ConfigError("model: invalid solver settings");
    return c;
}

} // namespace

InitialData InitialProfile::build(const Grid& g) const {
    const double L = g.extent[0];
    return InitialData::from_field(Field::from_function(g, [&](double a, Point x) {
        return scale * std::exp(-rate * a) * (1.0 + bump * std::cos(std::numbers::pi * x[0] / L));
    }));
}

Model parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    try {
        Model m;
        m.grid = parse_grid(section(j, "grid"));
        m.rates = parse_rates(section(j, "rates"), m.grid);
        m.noise = j.contains("noise") ? parse_noise(j.at("noise"), m.grid) : NoiseSpec{};
        if (j.contains("initial")) {
            const json& p = j.at("initial");
            m.initial.scale = value_or(p, "scale", 1.0);
            m.initial.rate = value_or(p, "rate", 0.0);
            m.initial.bump = value_or(p, "bump", 0.0);
        }
        if (j.contains("solver"))
            m.solver = parse_solver(j.at("solver"));
        if (j.contains("checks")) {
            const json& c = j.at("checks");
            m.check_apriori = value_or(c, "apriori", true);
            m.check_weak_residual = value_or(c, "weak_residual", true);
            m.check_positivity = value_or(c, "positivity", true);
            m.weak_residual_tol = value_or(c, "weak_residual_tol", m.weak_residual_tol);
            if (!(m.weak_residual_tol > 0.0))
                throw ConfigError("model: weak_residual_tol must be positive");
        }
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("model: cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_model(ss.str());
}

Grid coarsened(const Grid& g, int level) {
    if (level < 0 || level > 20)
        throw ConfigError("level must lie in [0, 20]");
    const int f = 1 << level;
    Grid c = g;
    auto divide = [&](int n, const char* what) {
        if (n % f != 0 || n / f < 2) {
            std::ostringstream os;
            os << "level " << level << ": " << what << " = " << n << " does not coarsen evenly";
            throw ConfigError(os.str());
        }
        return n / f;
    };
    c.n_t = divide(g.n_t, "n_t");
    c.n_a = divide(g.n_a, "n_a");
    for (int k = 0; k < g.dim; ++k)
        if (g.n_x[k] > 1)
            c.n_x[k] = divide(g.n_x[k], "n_x");
    c.validate();
    return c;
}

} // namespace spde
