#pragma once

#include <string>
#include <vector>

#include "spde/core.hpp"
#include "spde/pde_solver.hpp"
#include "spde/rescale.hpp"

namespace spde {

/// Inputs of the a-priori constants, kept alongside the results so they can
/// be recomputed from a log.
struct EstimateInputs {
    double c0 = 1.0;
    double c1 = 1.0;
    double T = 0.0;
    double a_plus = 0.0;
    double sup_g1 = 0.0;
    double sup_g2 = 0.0;
    double sup_div_g2 = 0.0;
    double mu_inf = 0.0;
    double m0_inf = 0.0;
    double gamma_inf = 0.0;
    double c_W0 = 1.0;
    double c_W = 1.0;
    double meas_OU = 0.0;
    double y0_norm_sq = 0.0;
    double k_integral = 0.0; // int_0^T |k(t)|^2_{L2((0,a+) x dO)} dt
    double L_muS_R0 = 0.0;   // declared Lipschitz constants evaluated at R0
    double L_m0_R0 = 0.0;
};

struct EstimateConstants {
    EstimateInputs in;
    double C_est = 0.0;
    double R0 = 0.0;
    double N0 = 0.0;
    double L1 = 0.0; // C_m(R0)
    double L2 = 0.0; // C_muS(R0)
};

/// c0 exp(c1 (1 + |g1| + |g2|^2 + a+ m0inf^2 cW0^2 + mu_inf^2) T).
double c_est(const EstimateInputs& in);
/// c0 exp(c1 (1 + |g1| + |g2|^2 + a+ m_inf^2 + mu_inf)) (|y0|^2 + int |k|^2),
/// with m_inf = cW0 m0inf.
double r0(const EstimateInputs& in);
/// Fills C_est, R0, N0 = ceil(R0) + 1, L1, L2 from the inputs. The Lipschitz
/// constants at R0 are taken from `in` when already set, otherwise from rates.
EstimateConstants finish_constants(EstimateInputs in, const VitalRates* rates = nullptr);

/// Boundary data of one path, per time level, [age][face] layout.
struct BoundaryHistory {
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> k;
};

BoundaryHistory boundary_history(const RescaledCoefficients& coeffs);

/// |k|^2 in L2((0,a+) x dO) for one time level.
double boundary_norm_sq(const Grid& g, std::span<const double> k);

EstimateConstants compute_constants(const RescaledCoefficients& coeffs, const VitalRates& rates,
                                    const Field& y0, double c0 = 1.0, double c1 = 1.0);

/// Squared discrete V-norm of the spatial gradient: forward differences on
/// interior faces, Robin flux alpha y + k on boundary faces (half-cell weight).
double grad_norm_sq(const Field& y, std::span<const double> alpha, std::span<const double> k);

struct AprioriResult {
    std::vector<double> t;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> ratio;
    double max_ratio = 0.0;
    bool passed = true;
};

/// Energy of y up to each t (|y(t)|^2 + exit-age trace + int |y|_V^2) against
/// C_est (|y0|^2 + int |k|^2). Needs a full-stride trajectory.
AprioriResult apriori_check(const SolveReport& report, const EstimateConstants& consts,
                            const BoundaryHistory& boundary);

/// Energy of the difference of two trajectories, per time level.
std::vector<double> difference_energy(const SolveReport& a, const SolveReport& b,
                                      const BoundaryHistory& ba, const BoundaryHistory& bb);

struct DependenceRun {
    const SolveReport& report;
    const RescaledCoefficients& coeffs;
    const EstimateConstants& consts;
};

struct DependenceResult {
    std::vector<double> lhs;
    std::vector<double> rhs;
    double energy_T = 0.0; // lhs at the final time
    double ratio = 0.0;    // max over t of lhs / rhs
};

/// Difference energy of two runs against the right-hand side of the
/// continuous-dependence bound. Symmetric in its arguments.
DependenceResult dependence_check(const DependenceRun& one, const DependenceRun& two);

struct WeakResidual {
    std::vector<double> residuals;
    double max_abs = 0.0;
};

/// Residual of the weak form of the rescaled problem for the tensor
/// polynomial family (T - t) a^i x^j, i, j <= 2, truncated to `basis_size`
/// members. Needs a full-stride trajectory.
WeakResidual weak_residual(const SolveReport& report, const VitalRates& rates,
                           const RescaledCoefficients& coeffs, int basis_size = 9);

/// Residual of the Ito weak form of the original problem at t = T for
/// time-independent test functions a^i x^j, with the stochastic integral
/// assembled as sum_n sum_j (mu_j psi p^n) dbeta_j^n.
WeakResidual weak_residual_ito(const SolveReport& report, const VitalRates& rates,
                               const NoiseSpec& spec, const BrownianBundle& bundle,
                               int basis_size = 9);

struct CheckRow {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = true;
};

} // namespace spde
