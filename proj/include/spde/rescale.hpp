#pragma once

#include <array>
#include <vector>

#include "spde/core.hpp"
#include "spde/noise.hpp"

namespace spde {

/// Coefficients of the rescaled (pathwise deterministic) problem at one time
/// level. Boundary vectors are laid out [age node][face] with faces in
/// boundary_faces() order.
struct CoefficientSnapshot {
    double t = 0.0;
    Field W;
    Field expW;
    Field g1;                  // W_a - lap W - |grad W|^2 + mu
    std::array<Field, 2> g2;   // -2 grad W
    Field div_g2;              // -2 lap W
    Field m_factor;            // e^{W(t,a,x) - W(t,0,x)}
    std::vector<double> alpha; // alpha0 (grad W . nu = 0)
    std::vector<double> k;     // k0 e^{-W}
};

struct CoefficientSups {
    double g1 = 0.0;     // sup |g1|
    double g2 = 0.0;     // sup |g2| (Euclidean)
    double div_g2 = 0.0; // sup |div g2|
    double c_W0 = 1.0;   // sup e^{W - W(.,0,.)}
    double c_W = 1.0;    // e^{sup |W|}
};

/// Rescaling constants over every stored time level and grid point.
struct RescaleConstants {
    double c_W0 = 1.0;
    double c_W = 1.0;
    double m_inf = 0.0; // c_W0 * m0_inf
};

/// Evaluator of the coefficient transforms for one noise path.
class RescaledCoefficients {
public:
    RescaledCoefficients(const NoiseSpec& spec, const BrownianBundle& bundle,
                         const VitalRates& rates, const Grid& g);

    const Grid& grid() const { return tables_.grid(); }
    const NoiseTables& tables() const { return tables_; }
    const BrownianBundle& bundle() const { return bundle_; }

    CoefficientSnapshot at(int t_index) const;
    /// Sups over all time levels; cached after the first call.
    const CoefficientSups& sups() const;

private:
    NoiseTables tables_;
    BrownianBundle bundle_;
    VitalRates rates_;
    mutable bool have_sups_ = false;
    mutable CoefficientSups sups_;
};

RescaledCoefficients build_coefficients(const NoiseSpec& spec, const BrownianBundle& bundle,
                                        const VitalRates& rates, const Grid& g);

/// The W = 0 snapshot: g1 = g2 = 0, k = k0, m = m0. Used by the direct
/// integrator for its deterministic part.
CoefficientSnapshot identity_snapshot(const VitalRates& rates, const Grid& g, int t_index);

/// e^W with the overflow check shared by both transforms.
Field exp_field(const Field& W, double sign = 1.0);

/// p = e^W y.
Field forward_transform(const Field& y, const Field& W);
/// y = e^{-W} p.
Field backward_transform(const Field& p, const Field& W);

RescaleConstants constants(const NoiseSpec& spec, const BrownianBundle& bundle,
                           const VitalRates& rates, const Grid& g);

} // namespace spde
