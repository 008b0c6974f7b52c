#pragma once

#include <random>

#include "spde/core.hpp"
#include "spde/noise.hpp"

namespace spde::testing {

inline VitalRates constant_rates(const Grid& g, double mu, double m0, double alpha0 = 0.0,
                                 double k0 = 0.0) {
    return make_separable_rates(RateFamily::constant(mu), {}, RateFamily::constant(m0), {}, 0.0,
                                alpha0, k0, Region::whole(g));
}

/// Logistic crowding: mortality rises and fertility falls with U.
inline VitalRates logistic_rates(const Grid& g, double gamma) {
    return make_separable_rates(RateFamily::logistic(0.2, 1.0, 2.0, 1.0), {},
                                RateFamily::logistic(1.5, 0.5, 2.0, 1.0), {}, gamma, 0.0, 0.0,
                                Region::whole(g));
}

inline Field random_field(const Grid& g, unsigned seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Field f(g);
    for (double& v : f.values())
        v = u(gen);
    return f;
}

inline NoiseSpec constant_noise(double c) {
    NoiseSpec s;
    s.amplitudes.push_back(Amplitude::constant(c));
    return s;
}

} // namespace spde::testing
