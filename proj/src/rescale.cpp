#include "spde/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spde {

namespace {

// exp overflows just above 709.78.
constexpr double kMaxExponent = 700.0;

std::vector<double> boundary_values(const Grid& g, const std::vector<Face>& faces, double t,
                                    const std::function<double(double, double, Point)>& f) {
    std::vector<double> out(static_cast<std::size_t>(g.age_nodes()) * faces.size());
    for (int i = 0; i < g.age_nodes(); ++i)
        for (std::size_t q = 0; q < faces.size(); ++q)
            out[i * faces.size() + q] = f(t, g.age(i), faces[q].x);
    return out;
}

NoiseTables checked_tables(const NoiseSpec& spec, const BrownianBundle& bundle, const Grid& g) {
    g.validate();
    spec.check(g);
    require_compatible(bundle, spec, g);
    return NoiseTables(spec, g);
}

} // namespace

RescaledCoefficients::RescaledCoefficients(const NoiseSpec& spec, const BrownianBundle& bundle,
                                           const VitalRates& rates, const Grid& g)
    : tables_(checked_tables(spec, bundle, g)), bundle_(bundle), rates_(rates) {}

CoefficientSnapshot RescaledCoefficients::at(int t_index) const {
    const Grid& g = grid();
    NoiseFields nf = tables_.fields(bundle_, t_index);
    CoefficientSnapshot s;
    s.t = g.time(t_index);
    s.expW = exp_field(nf.W);

    Field grad_sq = hadamard(nf.grad[0], nf.grad[0]);
    if (g.dim == 2)
        grad_sq += hadamard(nf.grad[1], nf.grad[1]);
    s.g1 = nf.W_a - nf.lap - grad_sq + tables_.ito_correction();
    s.g2 = {nf.grad[0] * -2.0, nf.grad[1] * -2.0};
    s.div_g2 = nf.lap * -2.0;

    s.m_factor = Field(g);
    for (int i = 0; i < g.age_nodes(); ++i)
        for (int c = 0; c < g.space_cells(); ++c)
            s.m_factor(i, c) = std::exp(nf.W(i, c) - nf.W(0, c));

    const auto& faces = tables_.face_list();
    s.alpha = boundary_values(g, faces, s.t, rates_.alpha0);
    s.k = boundary_values(g, faces, s.t, rates_.k0);
    for (std::size_t q = 0; q < s.k.size(); ++q)
        s.k[q] *= std::exp(-nf.W_boundary[q]);
    s.W = std::move(nf.W);
    return s;
}

const CoefficientSups& RescaledCoefficients::sups() const {
    if (have_sups_)
        return sups_;
    const Grid& g = grid();
    CoefficientSups out;
    double max_abs_w = 0.0;
    for (int n = 0; n <= g.n_t; ++n) {
        const CoefficientSnapshot s = at(n);
        out.g1 = std::max(out.g1, s.g1.max_abs());
        out.div_g2 = std::max(out.div_g2, s.div_g2.max_abs());
        for (std::size_t k = 0; k < s.g1.size(); ++k) {
            const double a = s.g2[0].values()[k];
            const double b = s.g2[1].values()[k];
            out.g2 = std::max(out.g2, std::sqrt(a * a + b * b));
        }
        out.c_W0 = std::max(out.c_W0, s.m_factor.max_abs());
        max_abs_w = std::max(max_abs_w, s.W.max_abs());
    }
    out.c_W = std::exp(max_abs_w);
    sups_ = out;
    have_sups_ = true;
    return sups_;
}

RescaledCoefficients build_coefficients(const NoiseSpec& spec, const BrownianBundle& bundle,
                                        const VitalRates& rates, const Grid& g) {
    return RescaledCoefficients(spec, bundle, rates, g);
}

CoefficientSnapshot identity_snapshot(const VitalRates& rates, const Grid& g, int t_index) {
    CoefficientSnapshot s;
    s.t = g.time(t_index);
    s.W = Field(g);
    s.expW = Field(g, 1.0);
    s.g1 = Field(g);
    s.g2 = {Field(g), Field(g)};
    s.div_g2 = Field(g);
    s.m_factor = Field(g, 1.0);
    const auto faces = boundary_faces(g);
    s.alpha = boundary_values(g, faces, s.t, rates.alpha0);
    s.k = boundary_values(g, faces, s.t, rates.k0);
    return s;
}

Field exp_field(const Field& W, double sign) {
    const double m = W.max_abs();
    if (!(m <= kMaxExponent)) {
        std::ostringstream os;
        os << "rescale: e^W overflows (max |W| = " << m << ")";
        throw NoiseMagnitudeError(os.str(), m);
    }
    Field e(W.grid());
    auto out = e.values();
    const auto in = W.values();
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = std::exp(sign * in[k]);
    return e;
}

Field forward_transform(const Field& y, const Field& W) { return hadamard(y, exp_field(W)); }

Field backward_transform(const Field& p, const Field& W) { return hadamard(p, exp_field(W, -1.0)); }

RescaleConstants constants(const NoiseSpec& spec, const BrownianBundle& bundle,
                           const VitalRates& rates, const Grid& g) {
    const RescaledCoefficients coeffs(spec, bundle, rates, g);
    const CoefficientSups& s = coeffs.sups();
    return {s.c_W0, s.c_W, s.c_W0 * rates.m0_inf};
}

} // namespace spde
