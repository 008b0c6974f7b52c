#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spde/error.hpp"

namespace spde {

using Point = std::array<double, 2>;

/// Uniform tensor grid on (0,T) x (0,a+) x O with O a box in R^d, d in {1,2}.
///
/// Ages live on nodes a_i = i*da, i = 0..n_a (trapezoid weights), space on
/// cell centres (midpoint weights). With characteristic alignment (the
/// default) dt must equal da so that age transport is an exact one-cell shift.
struct Grid {
    double T = 1.0;
    double a_plus = 1.0;
    int n_t = 2;
    int n_a = 2;
    int dim = 1;
    std::array<double, 2> extent{1.0, 1.0};
    std::array<int, 2> n_x{1, 1};
    bool aligned = true;

    static Grid make_1d(double T, double a_plus, int n_t, int n_a, double length, int n_x,
                        bool aligned = true);
    static Grid make_2d(double T, double a_plus, int n_t, int n_a, std::array<double, 2> extent,
                        std::array<int, 2> n_x, bool aligned = true);

    /// Throws ConfigError when an invariant fails.
    void validate() const;

    double dt() const { return T / n_t; }
    double da() const { return a_plus / n_a; }
    double dx(int k) const { return extent[k] / n_x[k]; }
    double time(int n) const { return n * dt(); }
    double age(int i) const { return i * da(); }

    int age_nodes() const { return n_a + 1; }
    int space_cells() const { return dim == 2 ? n_x[0] * n_x[1] : n_x[0]; }
    std::size_t size() const {
        return static_cast<std::size_t>(age_nodes()) * static_cast<std::size_t>(space_cells());
    }
    double cell_volume() const { return dim == 2 ? dx(0) * dx(1) : dx(0); }
    double domain_volume() const { return dim == 2 ? extent[0] * extent[1] : extent[0]; }

    /// Trapezoid weight of age node i.
    double age_weight(int i) const { return (i == 0 || i == n_a) ? 0.5 * da() : da(); }

    /// Row-major flat index of a spatial cell; index[1] is ignored for d = 1.
    int cell_index(std::array<int, 2> idx) const {
        return dim == 2 ? idx[0] * n_x[1] + idx[1] : idx[0];
    }
    std::array<int, 2> cell_multi_index(int s) const {
        return dim == 2 ? std::array<int, 2>{s / n_x[1], s % n_x[1]} : std::array<int, 2>{s, 0};
    }
    Point cell_center(int s) const;

    bool operator==(const Grid&) const = default;
};

/// A boundary face of the spatial grid: the cell it closes, the axis, and
/// which end (0 = lower, 1 = upper). `x` is the face centre on the boundary.
struct Face {
    int cell;
    int axis;
    int side;
    Point x;
    double area; // measure of the face (1 in d = 1)
};

/// Faces enumerated axis by axis, lower side first, cells in row-major order.
std::vector<Face> boundary_faces(const Grid& g);

/// Scalar function on the (age x space) grid at one time level.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0);
    Field(const Grid& g, std::vector<double> values);

    template <class F>
    static Field from_function(const Grid& g, F&& f) {
        Field out(g);
        for (int i = 0; i < g.age_nodes(); ++i)
            for (int s = 0; s < g.space_cells(); ++s)
                out(i, s) = f(g.age(i), g.cell_center(s));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(int age, int cell) { return values_[index(age, cell)]; }
    double operator()(int age, int cell) const { return values_[index(age, cell)]; }

    std::span<double> row(int age) {
        return {values_.data() + index(age, 0), static_cast<std::size_t>(grid_.space_cells())};
    }
    std::span<const double> row(int age) const {
        return {values_.data() + index(age, 0), static_cast<std::size_t>(grid_.space_cells())};
    }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool all_finite() const;
    /// Throws InvalidFieldError naming the first non-finite entry.
    void require_finite(const char* context) const;
    double min() const;
    double max_abs() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, double s) { return a *= s; }
    friend Field operator*(double s, Field a) { return a *= s; }

    /// Pointwise product.
    friend Field hadamard(Field a, const Field& b);

private:
    std::size_t index(int age, int cell) const {
        return static_cast<std::size_t>(age) * static_cast<std::size_t>(grid_.space_cells()) +
               static_cast<std::size_t>(cell);
    }
    void require_same_grid(const Field& o) const;

    Grid grid_;
    std::vector<double> values_;
};

/// Discrete L2(0,a+; L2(O)) norm: trapezoid in age, midpoint in space.
double h_norm(const Field& f);

/// Integral over (0,a+) x O with the same quadrature.
double integral(const Field& f);

/// Sub-box O_U of O; must be aligned with cell faces.
struct Region {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    static Region whole(const Grid& g) { return {{0.0, 0.0}, g.extent}; }
    double measure(int dim) const {
        return dim == 2 ? (hi[0] - lo[0]) * (hi[1] - lo[1]) : hi[0] - lo[0];
    }
    /// Indices of cells inside the region; ConfigError if not grid-aligned.
    std::vector<int> cells(const Grid& g) const;
};

using AgeSpaceFn = std::function<double(double a, Point x)>;

/// Quadrature of gamma*f over (0,a+) x O_U.
double u_functional(const Field& f, const AgeSpaceFn& gamma, const Region& region);

/// Precomputed gamma weights on a region, for repeated evaluation inside
/// solver loops.
class UWeights {
public:
    UWeights() = default;
    UWeights(const Grid& g, const AgeSpaceFn& gamma, const Region& region);
    double apply(const Field& f) const;
    /// Evaluates U(e^W f) without forming the product field.
    double apply_scaled(const Field& f, const Field& expw) const;
    bool vanishes() const { return zero_; }

private:
    std::vector<int> cells_;
    std::vector<double> w_; // weight per (age, region cell), row-major
    int ages_ = 0;
    int stride_ = 0;
    bool zero_ = true;
};

/// User-supplied vital rates and their declared bounds.
struct VitalRates {
    std::function<double(double t, double a, Point x, double r)> mu_S;
    std::function<double(double a, Point x, double r)> m0;
    AgeSpaceFn gamma;
    std::function<double(double t, double a, Point x)> alpha0;
    std::function<double(double t, double a, Point x)> k0;
    double mu_inf = 0.0;
    double m0_inf = 0.0;
    double gamma_inf = 0.0;
    std::function<double(double R)> L_muS;
    std::function<double(double R)> L_m0;
    Region u_region;
};

/// Sigmoid in r: lo + (hi - lo) / (1 + exp(-slope (r - midpoint))).
/// slope == 0 gives the constant lo.
struct RateFamily {
    double lo = 0.0;
    double hi = 0.0;
    double slope = 0.0;
    double midpoint = 0.0;

    static RateFamily constant(double v) { return {v, v, 0.0, 0.0}; }
    static RateFamily logistic(double lo, double hi, double slope, double midpoint) {
        return {lo, hi, slope, midpoint};
    }

    double operator()(double r) const;
    double sup() const;
    double lipschitz() const;
};

/// Piecewise-linear profile in age, clamped at the ends. Empty means 1.
struct AgeTable {
    std::vector<double> ages;
    std::vector<double> values;

    double operator()(double a) const;
    double sup() const;
};

/// Separable rates: profile(a) * family(r), spatially uniform.
VitalRates make_separable_rates(const RateFamily& mu_S, const AgeTable& mu_S_age,
                                const RateFamily& m0, const AgeTable& m0_age, double gamma,
                                double alpha0, double k0, const Region& u_region);

struct InitialData {
    Field p0;
    bool nonnegative = false;

    /// Checks finiteness and records the sign flag.
    static InitialData from_field(Field p0);
};

struct RateViolation {
    std::string what;
    double t, a, r;
    Point x;
};

struct RateValidation {
    bool passed = true;
    int samples = 0;
    int violating_samples = 0;
    std::vector<RateViolation> violations;
};

/// Spot-checks the declared bounds and local Lipschitz constants of `v` on a
/// sampled (t, a, x) x r lattice with |r| <= r_max. Report only.
RateValidation validate_rates(const VitalRates& v, const Grid& g, int sample_budget,
                              double r_max = 10.0);

} // namespace spde
