#pragma once

#include <array>
#include <span>
#include <vector>

#include "spde/core.hpp"

namespace spde {

/// Age transport with zeroth-order decay.
///
/// Aligned grids shift every age node one cell up and multiply by
/// exp(-(g1 + mu_S) dt) taken at the departure node, which is exact along
/// characteristics for constant rates. Unaligned grids use first-order upwind
/// in age. Row 0 is zeroed; the renewal step fills it.
Field transport_reaction_substep(const Field& y, const Field& g1, const Field& mu_S, double dt);

/// Trapezoid quadrature in age of m * y for each spatial cell.
std::vector<double> renewal_row(const Field& y, const Field& m);

/// Sets row 0 of `y` to the value that satisfies the trapezoid renewal
/// relation with itself: y0 = w0 m0 y0 + sum_{i>0} w_i m_i y_i.
/// ConfigError when 1 - w0 m0 <= 0 (age step too coarse for the fertility).
void solve_renewal_row(Field& y, const Field& m);

/// Implicit (backward Euler) diffusion with Robin closure and optional
/// upwinded first-order drift, one age level at a time.
///
/// The Robin flux -grad y . nu = alpha y + k enters through the ghost value
/// ghost = interior - dx (alpha y + k). In d = 2 the two axes are swept one
/// after the other. The assembled matrix is an M-matrix for alpha >= 0.
class DiffusionOperator {
public:
    explicit DiffusionOperator(const Grid& g);

    /// alpha and k are laid out [age][face] (boundary_faces order); drift may
    /// be null.
    Field apply(const Field& y, std::span<const double> alpha, std::span<const double> k,
                const std::array<Field, 2>* drift, double dt) const;

    /// Serial reference; bit-for-bit identical to apply().
    Field apply_serial(const Field& y, std::span<const double> alpha, std::span<const double> k,
                       const std::array<Field, 2>* drift, double dt) const;

    const Grid& grid() const { return grid_; }

private:
    struct Line {
        int axis;
        std::vector<int> cells;
        int face_lo;
        int face_hi;
    };

    void solve_age_row(int age, Field& y, std::span<const double> alpha,
                       std::span<const double> k, const std::array<Field, 2>* drift, double dt,
                       std::vector<double>& scratch) const;

    Grid grid_;
    std::size_t n_faces_ = 0;
    std::vector<Line> lines_; // axis 0 lines first, then axis 1
};

Field diffusion_substep(const Field& y, std::span<const double> alpha, std::span<const double> k,
                        double dt, const std::array<Field, 2>* drift = nullptr);

} // namespace spde
