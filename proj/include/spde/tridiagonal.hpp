#pragma once

#include <cmath>
#include <span>

#include "spde/error.hpp"

namespace spde {

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` are
/// ignored. `rhs` is overwritten with the solution, `upper` is used as scratch.
///
/// For a diagonally dominant M-matrix every pivot is positive and every
/// operation combines same-signed terms, so a nonnegative right-hand side
/// yields a nonnegative solution in floating point as well.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    double pivot = diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot))
        throw Error(ErrorKind::Internal, "tridiagonal: singular pivot");
    upper[0] /= pivot;
    rhs[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * upper[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw Error(ErrorKind::Internal, "tridiagonal: singular pivot");
        if (i + 1 < n)
            upper[i] /= pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= upper[i] * rhs[i + 1];
}

} // namespace spde
