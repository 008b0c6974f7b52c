#include "spde/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spde {

double c_est(const EstimateInputs& in) {
    const double e = 1.0 + in.sup_g1 + in.sup_g2 * in.sup_g2 +
                     in.a_plus * in.m0_inf * in.m0_inf * in.c_W0 * in.c_W0 +
                     in.mu_inf * in.mu_inf;
    return in.c0 * std::exp(in.c1 * e * in.T);
}

double r0(const EstimateInputs& in) {
    const double m_inf = in.c_W0 * in.m0_inf;
    const double e = 1.0 + in.sup_g1 + in.sup_g2 * in.sup_g2 + in.a_plus * m_inf * m_inf + in.mu_inf;
    return in.c0 * std::exp(in.c1 * e) * (in.y0_norm_sq + in.k_integral);
}

EstimateConstants finish_constants(EstimateInputs in, const VitalRates* rates) {
    EstimateConstants out;
    out.C_est = c_est(in);
    out.R0 = r0(in);
    out.N0 = std::ceil(out.R0) + 1.0;
    if (rates) {
        if (in.L_muS_R0 == 0.0 && rates->L_muS)
            in.L_muS_R0 = rates->L_muS(out.R0);
        if (in.L_m0_R0 == 0.0 && rates->L_m0)
            in.L_m0_R0 = rates->L_m0(out.R0);
    }
    const double u_bound = in.gamma_inf * std::sqrt(in.a_plus * in.meas_OU) * out.R0;
    out.L1 = in.c_W0 * in.c_W * in.L_m0_R0 * u_bound + in.c_W0 * in.m0_inf;
    out.L2 = in.c_W * in.L_muS_R0 * u_bound + in.mu_inf;
    out.in = in;
    return out;
}

BoundaryHistory boundary_history(const RescaledCoefficients& coeffs) {
    BoundaryHistory h;
    for (int n = 0; n <= coeffs.grid().n_t; ++n) {
        CoefficientSnapshot s = coeffs.at(n);
        h.alpha.push_back(std::move(s.alpha));
        h.k.push_back(std::move(s.k));
    }
    return h;
}

namespace {

double trapezoid_step(const Grid& g, const std::vector<double>& f, int n) {
    return n == 0 ? 0.0 : 0.5 * g.dt() * (f[n - 1] + f[n]);
}

double boundary_norm_sq(const Grid& g, const std::vector<Face>& faces, std::span<const double> k) {
    double sum = 0.0;
    for (int i = 0; i < g.age_nodes(); ++i) {
        double row = 0.0;
        for (std::size_t q = 0; q < faces.size(); ++q) {
            const double v = k[i * faces.size() + q];
            row += v * v * faces[q].area;
        }
        sum += g.age_weight(i) * row;
    }
    return sum;
}

// Faces of the spatial grid with the data needed for discrete gradients:
// interior faces carry both neighbours, boundary faces the Robin flux.
struct FaceEntry {
    int axis;
    int lo;   // cell below the face, -1 on a lower boundary face
    int hi;   // cell above the face, -1 on an upper boundary face
    int face; // boundary face index, -1 for interior faces
    Point x;
    double weight; // dual-cell volume
};

class FaceSet {
public:
    explicit FaceSet(const Grid& g) : g_(g) {
        const auto bfaces = boundary_faces(g);
        faces_ = static_cast<int>(bfaces.size());
        const int S = g.space_cells();
        below_.assign(2, std::vector<int>(S, -1));
        above_.assign(2, std::vector<int>(S, -1));
        for (std::size_t q = 0; q < bfaces.size(); ++q) {
            const Face& f = bfaces[q];
            const int e = static_cast<int>(entries_.size());
            if (f.side == 0) {
                entries_.push_back({f.axis, -1, f.cell, static_cast<int>(q), f.x,
                                    0.5 * g.cell_volume()});
                below_[f.axis][f.cell] = e;
            } else {
                entries_.push_back({f.axis, f.cell, -1, static_cast<int>(q), f.x,
                                    0.5 * g.cell_volume()});
                above_[f.axis][f.cell] = e;
            }
        }
        for (int axis = 0; axis < g.dim; ++axis) {
            const double h = g.dx(axis);
            for (int s = 0; s < S; ++s) {
                auto idx = g.cell_multi_index(s);
                if (idx[axis] + 1 >= g.n_x[axis])
                    continue;
                ++idx[axis];
                const int t = g.cell_index(idx);
                Point x = g.cell_center(s);
                x[axis] += 0.5 * h;
                const int e = static_cast<int>(entries_.size());
                entries_.push_back({axis, s, t, -1, x, g.cell_volume()});
                above_[axis][s] = e;
                below_[axis][t] = e;
            }
        }
    }

    const std::vector<FaceEntry>& entries() const { return entries_; }

    /// d y / d x_axis on every face entry for one age row.
    void gradients(std::span<const double> y, std::span<const double> alpha,
                   std::span<const double> k, int age, std::vector<double>& out) const {
        out.resize(entries_.size());
        const std::size_t base = static_cast<std::size_t>(age) * faces_;
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const FaceEntry& f = entries_[e];
            if (f.face < 0) {
                out[e] = (y[f.hi] - y[f.lo]) / g_.dx(f.axis);
            } else {
                const std::size_t q = base + f.face;
                const int c = f.lo < 0 ? f.hi : f.lo;
                const double flux = alpha[q] * y[c] + k[q];
                // -grad y . nu = flux with nu = -e_axis below, +e_axis above
                out[e] = f.lo < 0 ? flux : -flux;
            }
        }
    }

    /// Cell gradient along `axis` as the mean of the two bounding faces.
    double cell_gradient(const std::vector<double>& grads, int axis, int cell) const {
        return 0.5 * (grads[below_[axis][cell]] + grads[above_[axis][cell]]);
    }

private:
    Grid g_;
    int faces_ = 0;
    std::vector<FaceEntry> entries_;
    std::vector<std::vector<int>> below_, above_;
};

double row_energy(const std::vector<FaceEntry>& entries, const std::vector<double>& grads) {
    double sum = 0.0;
    for (std::size_t e = 0; e < entries.size(); ++e)
        sum += entries[e].weight * grads[e] * grads[e];
    return sum;
}

// Squared gradient norm of y_a - y_b (y_b may be null).
double grad_norm_sq_pair(const Field& ya, std::span<const double> alpha_a,
                         std::span<const double> k_a, const Field* yb,
                         std::span<const double> alpha_b, std::span<const double> k_b) {
    const Grid& g = ya.grid();
    const FaceSet fs(g);
    std::vector<double> ga, gb;
    double sum = 0.0;
    for (int i = 0; i < g.age_nodes(); ++i) {
        fs.gradients(ya.row(i), alpha_a, k_a, i, ga);
        if (yb) {
            fs.gradients(yb->row(i), alpha_b, k_b, i, gb);
            for (std::size_t e = 0; e < ga.size(); ++e)
                ga[e] -= gb[e];
        }
        sum += g.age_weight(i) * row_energy(fs.entries(), ga);
    }
    return sum;
}

double exit_trace_sq(const Field& y) {
    const Grid& g = y.grid();
    double sum = 0.0;
    for (double v : y.row(g.n_a))
        sum += v * v;
    return sum * g.cell_volume();
}

void require_full_stride(const SolveReport& r, const char* what) {
    if (!r.full_stride())
        throw ConfigError(std::string(what) + ": needs every time level (snapshot stride 1)");
}

// Energy series of y_a - y_b, or of y_a alone when b is null.
std::vector<double> energy_series(const SolveReport& a, const BoundaryHistory& ba,
                                  const SolveReport* b, const BoundaryHistory* bb) {
    const Grid& g = a.grid;
    const int levels = g.n_t + 1;
    std::vector<double> trace(levels), v(levels), out(levels);
    double trace_int = 0.0, v_int = 0.0;
    for (int n = 0; n < levels; ++n) {
        const Field d = b ? a.y[n] - b->y[n] : a.y[n];
        const double h2 = std::pow(h_norm(d), 2);
        trace[n] = exit_trace_sq(d);
        v[n] = h2 + (b ? grad_norm_sq_pair(a.y[n], ba.alpha[n], ba.k[n], &b->y[n], bb->alpha[n],
                                           bb->k[n])
                       : grad_norm_sq_pair(a.y[n], ba.alpha[n], ba.k[n], nullptr, {}, {}));
        trace_int += trapezoid_step(g, trace, n);
        v_int += trapezoid_step(g, v, n);
        out[n] = h2 + trace_int + v_int;
    }
    return out;
}

} // namespace

double boundary_norm_sq(const Grid& g, std::span<const double> k) {
    return boundary_norm_sq(g, boundary_faces(g), k);
}

EstimateConstants compute_constants(const RescaledCoefficients& coeffs, const VitalRates& rates,
                                    const Field& y0, double c0, double c1) {
    const Grid& g = coeffs.grid();
    const CoefficientSups& s = coeffs.sups();
    EstimateInputs in;
    in.c0 = c0;
    in.c1 = c1;
    in.T = g.T;
    in.a_plus = g.a_plus;
    in.sup_g1 = s.g1;
    in.sup_g2 = s.g2;
    in.sup_div_g2 = s.div_g2;
    in.mu_inf = rates.mu_inf;
    in.m0_inf = rates.m0_inf;
    in.gamma_inf = rates.gamma_inf;
    in.c_W0 = s.c_W0;
    in.c_W = s.c_W;
    in.meas_OU = rates.u_region.measure(g.dim);
    in.y0_norm_sq = std::pow(h_norm(y0), 2);

    const auto faces = boundary_faces(g);
    const BoundaryHistory bh = boundary_history(coeffs);
    std::vector<double> kb(g.n_t + 1);
    for (int n = 0; n <= g.n_t; ++n) {
        kb[n] = boundary_norm_sq(g, faces, bh.k[n]);
        in.k_integral += trapezoid_step(g, kb, n);
    }
    return finish_constants(in, &rates);
}

double grad_norm_sq(const Field& y, std::span<const double> alpha, std::span<const double> k) {
    return grad_norm_sq_pair(y, alpha, k, nullptr, {}, {});
}

AprioriResult apriori_check(const SolveReport& report, const EstimateConstants& consts,
                            const BoundaryHistory& boundary) {
    require_full_stride(report, "apriori_check");
    const Grid& g = report.grid;
    const auto faces = boundary_faces(g);
    AprioriResult res;
    res.lhs = energy_series(report, boundary, nullptr, nullptr);
    const double y0 = std::pow(h_norm(report.y.front()), 2);
    std::vector<double> kb(g.n_t + 1);
    double k_int = 0.0;
    for (int n = 0; n <= g.n_t; ++n) {
        kb[n] = boundary_norm_sq(g, faces, boundary.k[n]);
        k_int += trapezoid_step(g, kb, n);
        const double rhs = consts.C_est * (y0 + k_int);
        const double lhs = res.lhs[n];
        double ratio;
        if (rhs > 0.0)
            ratio = lhs / rhs;
        else
            ratio = lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        res.t.push_back(g.time(n));
        res.rhs.push_back(rhs);
        res.ratio.push_back(ratio);
        res.max_ratio = std::max(res.max_ratio, ratio);
    }
    res.passed = res.max_ratio <= 1.0;
    return res;
}

std::vector<double> difference_energy(const SolveReport& a, const SolveReport& b,
                                      const BoundaryHistory& ba, const BoundaryHistory& bb) {
    require_full_stride(a, "difference_energy");
    require_full_stride(b, "difference_energy");
    if (!(a.grid == b.grid))
        throw ConfigError("difference_energy: reports on different grids");
    return energy_series(a, ba, &b, &bb);
}

DependenceResult dependence_check(const DependenceRun& one, const DependenceRun& two) {
    const Grid& g = one.report.grid;
    if (!(two.report.grid == g))
        throw ConfigError("dependence_check: reports on different grids");
    const BoundaryHistory b1 = boundary_history(one.coeffs);
    const BoundaryHistory b2 = boundary_history(two.coeffs);

    // Prefactor and C-bar-bar use the larger of the two runs so that the
    // check does not depend on the order of its arguments.
    const EstimateInputs& i1 = one.consts.in;
    const EstimateInputs& i2 = two.consts.in;
    const double c0 = std::max(i1.c0, i2.c0);
    const double c1 = std::max(i1.c1, i2.c1);
    const double f1 = std::max(i1.sup_g1, i2.sup_g1);
    const double div_f2 = std::max(i1.sup_div_g2, i2.sup_div_g2);
    const double L1 = std::max(one.consts.L1, two.consts.L1);
    const double L2 = std::max(one.consts.L2, two.consts.L2);
    const double pre = c0 * std::exp(c1 * (1.0 + f1 + div_f2 + L1 * L1 + g.a_plus * L2 * L2) * g.T);
    const double cbb = std::max(one.consts.C_est * (i1.y0_norm_sq + i1.k_integral),
                                two.consts.C_est * (i2.y0_norm_sq + i2.k_integral));

    double d_g1 = 0.0, d_g2 = 0.0, d_alpha = 0.0;
    const auto faces = boundary_faces(g);
    std::vector<double> dk(g.n_t + 1);
    std::vector<double> k_int(g.n_t + 1, 0.0);
    for (int n = 0; n <= g.n_t; ++n) {
        const CoefficientSnapshot s1 = one.coeffs.at(n);
        const CoefficientSnapshot s2 = two.coeffs.at(n);
        d_g1 = std::max(d_g1, (s1.g1 - s2.g1).max_abs());
        for (int ax = 0; ax < g.dim; ++ax)
            d_g2 = std::max(d_g2, (s1.g2[ax] - s2.g2[ax]).max_abs());
        std::vector<double> diff(s1.k.size());
        for (std::size_t q = 0; q < diff.size(); ++q) {
            diff[q] = s1.k[q] - s2.k[q];
            d_alpha = std::max(d_alpha, std::abs(s1.alpha[q] - s2.alpha[q]));
        }
        dk[n] = boundary_norm_sq(g, faces, diff);
        k_int[n] = (n > 0 ? k_int[n - 1] : 0.0) + trapezoid_step(g, dk, n);
    }

    DependenceResult res;
    res.lhs = difference_energy(one.report, two.report, b1, b2);
    const double y0 = std::pow(h_norm(one.report.y.front() - two.report.y.front()), 2);
    const double coeff_term = cbb * (d_g1 * d_g1 + d_g2 * d_g2 + d_alpha * d_alpha);
    for (int n = 0; n <= g.n_t; ++n) {
        const double rhs = pre * (y0 + coeff_term + k_int[n]);
        res.rhs.push_back(rhs);
        const double ratio = rhs > 0.0 ? res.lhs[n] / rhs
                                       : (res.lhs[n] == 0.0 ? 0.0
                                                            : std::numeric_limits<double>::infinity());
        res.ratio = std::max(res.ratio, ratio);
    }
    res.energy_T = res.lhs.back();
    return res;
}

namespace {

// psi(t, a, x) = tau(t) a^i prod_k x_k^j.
struct TestFunction {
    int i = 0;
    int j = 0;
    int dim = 1;

    static double mono(double x, int p) { return p == 0 ? 1.0 : std::pow(x, p); }
    static double mono_d(double x, int p) { return p == 0 ? 0.0 : p * mono(x, p - 1); }

    double age(double a) const { return mono(a, i); }
    double age_d(double a) const { return mono_d(a, i); }
    double space(Point x) const {
        double v = mono(x[0], j);
        if (dim == 2)
            v *= mono(x[1], j);
        return v;
    }
    double space_d(int axis, Point x) const {
        double v = mono_d(x[axis], j);
        if (dim == 2)
            v *= mono(x[1 - axis], j);
        return v;
    }
};

std::vector<TestFunction> test_family(int dim, int basis_size) {
    if (basis_size < 1 || basis_size > 9)
        throw ConfigError("weak residual: basis size must lie in [1, 9]");
    std::vector<TestFunction> fam;
    for (int deg = 0; deg <= 4; ++deg)
        for (int i = 0; i <= 2; ++i) {
            const int j = deg - i;
            if (j >= 0 && j <= 2)
                fam.push_back({i, j, dim});
        }
    fam.resize(static_cast<std::size_t>(basis_size));
    return fam;
}

// Trapezoid weight of time level n.
double time_weight(const Grid& g, int n) {
    return (n == 0 || n == g.n_t) ? 0.5 * g.dt() : g.dt();
}

// Space-age integrals shared by both weak forms at one time level, for a
// time-independent factor psi(a, x) = a^i x^j:
//   exit trace, -y psi_a, grad y . grad psi, boundary flux, renewal.
struct LevelTerms {
    double mass = 0.0;     // (y, psi)
    double exit = 0.0;     // int_O y(a+) psi(a+)
    double transport = 0.0; // -(y, psi_a)
    double renewal = 0.0;  // -int_O (int_0^a+ m y da) psi(0, x)
    double diffusion = 0.0; // (grad y, grad psi)
    double boundary = 0.0; // int int_dO (alpha y + k) psi
    double reaction = 0.0; // (coefficient * y, psi), caller supplied
    double drift = 0.0;    // (psi g2 . grad y)
};

LevelTerms level_terms(const Grid& g, const FaceSet& fs, const std::vector<Face>& faces,
                       const TestFunction& psi, const Field& y, std::span<const double> alpha,
                       std::span<const double> k, const Field& m, const Field& reaction,
                       const std::array<Field, 2>* g2) {
    LevelTerms L;
    const double vol = g.cell_volume();
    std::vector<double> grads;
    std::vector<double> births(static_cast<std::size_t>(g.space_cells()), 0.0);
    for (int i = 0; i < g.age_nodes(); ++i) {
        const double a = g.age(i);
        const double wa = g.age_weight(i);
        const double pa = psi.age(a);
        const double pa_d = psi.age_d(a);
        fs.gradients(y.row(i), alpha, k, i, grads);
        for (int s = 0; s < g.space_cells(); ++s) {
            const Point x = g.cell_center(s);
            const double px = psi.space(x);
            const double v = y(i, s);
            L.mass += wa * vol * v * pa * px;
            L.transport -= wa * vol * v * pa_d * px;
            L.reaction += wa * vol * reaction(i, s) * v * pa * px;
            births[s] += wa * m(i, s) * v;
            if (g2) {
                double dot = 0.0;
                for (int ax = 0; ax < g.dim; ++ax)
                    dot += (*g2)[ax](i, s) * fs.cell_gradient(grads, ax, s);
                L.drift += wa * vol * pa * px * dot;
            }
        }
        for (std::size_t e = 0; e < fs.entries().size(); ++e) {
            const FaceEntry& f = fs.entries()[e];
            L.diffusion += wa * f.weight * grads[e] * pa * psi.space_d(f.axis, f.x);
        }
        const std::size_t base = static_cast<std::size_t>(i) * faces.size();
        for (std::size_t q = 0; q < faces.size(); ++q) {
            const double flux = alpha[base + q] * y(i, faces[q].cell) + k[base + q];
            L.boundary += wa * faces[q].area * flux * pa * psi.space(faces[q].x);
        }
    }
    const double pa_plus = psi.age(g.a_plus);
    const double pa_zero = psi.age(0.0);
    for (int s = 0; s < g.space_cells(); ++s) {
        const double px = psi.space(g.cell_center(s));
        L.exit += vol * y(g.n_a, s) * pa_plus * px;
        L.renewal -= vol * births[s] * pa_zero * px;
    }
    return L;
}

} // namespace

WeakResidual weak_residual(const SolveReport& report, const VitalRates& rates,
                           const RescaledCoefficients& coeffs, int basis_size) {
    require_full_stride(report, "weak_residual");
    const Grid& g = report.grid;
    if (!(coeffs.grid() == g))
        throw ConfigError("weak_residual: coefficients on a different grid");
    const auto family = test_family(g.dim, basis_size);
    const FaceSet fs(g);
    const auto faces = boundary_faces(g);

    std::vector<double> res(family.size(), 0.0);
    Field m(g), reaction(g);
    for (int n = 0; n <= g.n_t; ++n) {
        const CoefficientSnapshot snap = coeffs.at(n);
        const double t = g.time(n);
        const double U = report.u_value[n];
        for (int i = 0; i < g.age_nodes(); ++i)
            for (int s = 0; s < g.space_cells(); ++s) {
                const Point x = g.cell_center(s);
                m(i, s) = rates.m0(g.age(i), x, U) * snap.m_factor(i, s);
                reaction(i, s) = snap.g1(i, s) + rates.mu_S(t, g.age(i), x, U);
            }
        const Field& y = report.y[n];
        const double w = time_weight(g, n);
        for (std::size_t f = 0; f < family.size(); ++f) {
            const LevelTerms L =
                level_terms(g, fs, faces, family[f], y, snap.alpha, snap.k, m, reaction, &snap.g2);
            const double tau = g.T - t;
            // psi_t = -a^i x^j
            res[f] += w * (L.mass + tau * (L.exit + L.transport + L.renewal + L.diffusion +
                                           L.boundary + L.reaction + L.drift));
            if (n == 0)
                res[f] -= g.T * L.mass;
        }
    }
    WeakResidual out;
    out.residuals = res;
    for (double r : res)
        out.max_abs = std::max(out.max_abs, std::abs(r));
    return out;
}

WeakResidual weak_residual_ito(const SolveReport& report, const VitalRates& rates,
                               const NoiseSpec& spec, const BrownianBundle& bundle,
                               int basis_size) {
    require_full_stride(report, "weak_residual_ito");
    const Grid& g = report.grid;
    require_compatible(bundle, spec, g);
    const auto family = test_family(g.dim, basis_size);
    const FaceSet fs(g);
    const auto faces = boundary_faces(g);
    const NoiseTables tables(spec, g);

    std::vector<double> res(family.size(), 0.0);
    Field m(g), reaction(g);
    std::vector<double> dbeta(static_cast<std::size_t>(spec.modes()));
    const Field& p0 = report.p.front();
    const Field& pT = report.p.back();
    for (std::size_t f = 0; f < family.size(); ++f) {
        const TestFunction& psi = family[f];
        double mass_T = 0.0, mass_0 = 0.0;
        for (int i = 0; i < g.age_nodes(); ++i)
            for (int s = 0; s < g.space_cells(); ++s) {
                const double wv = g.age_weight(i) * g.cell_volume() * psi.age(g.age(i)) *
                                  psi.space(g.cell_center(s));
                mass_T += wv * pT(i, s);
                mass_0 += wv * p0(i, s);
            }
        res[f] = mass_T - mass_0;
    }

    // Left-point sums in time; the stochastic integral uses the same points.
    for (int n = 0; n < g.n_t; ++n) {
        const double t = g.time(n);
        const double U = report.u_value[n];
        const Field& p = report.p[n];
        std::vector<double> alpha(faces.size() * g.age_nodes()), k(alpha.size());
        for (int i = 0; i < g.age_nodes(); ++i)
            for (std::size_t q = 0; q < faces.size(); ++q) {
                alpha[i * faces.size() + q] = rates.alpha0(t, g.age(i), faces[q].x);
                k[i * faces.size() + q] = rates.k0(t, g.age(i), faces[q].x);
            }
        for (int i = 0; i < g.age_nodes(); ++i)
            for (int s = 0; s < g.space_cells(); ++s) {
                const Point x = g.cell_center(s);
                m(i, s) = rates.m0(g.age(i), x, U);
                reaction(i, s) = rates.mu_S(t, g.age(i), x, U);
            }
        for (int j = 0; j < spec.modes(); ++j)
            dbeta[j] = bundle.increment(j, n);
        const Field noise = hadamard(tables.weighted_sum(dbeta), p);
        for (std::size_t f = 0; f < family.size(); ++f) {
            const TestFunction& psi = family[f];
            const LevelTerms L = level_terms(g, fs, faces, psi, p, alpha, k, m, reaction, nullptr);
            double ito = 0.0;
            for (int i = 0; i < g.age_nodes(); ++i)
                for (int s = 0; s < g.space_cells(); ++s)
                    ito += g.age_weight(i) * g.cell_volume() * noise(i, s) *
                           psi.age(g.age(i)) * psi.space(g.cell_center(s));
            res[f] += g.dt() * (L.exit + L.transport + L.renewal + L.diffusion + L.boundary +
                                L.reaction) -
                      ito;
        }
    }
    WeakResidual out;
    out.residuals = res;
    for (double r : res)
        out.max_abs = std::max(out.max_abs, std::abs(r));
    return out;
}

} // namespace spde
