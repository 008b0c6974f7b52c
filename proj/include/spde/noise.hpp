#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "spde/core.hpp"

namespace spde {

/// Spatial factor of an amplitude along one axis: 1, cos(omega x) or sin(omega x).
struct SpatialFactor {
    enum class Kind { One, Cos, Sin };
    Kind kind = Kind::One;
    double omega = 0.0;

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
};

/// Noise amplitude mu_j(a, x) = P(a) * S_0(x_0) * S_1(x_1) with analytic
/// derivatives; P is a polynomial with coefficients in increasing degree.
struct Amplitude {
    std::vector<double> age_poly{1.0};
    std::array<SpatialFactor, 2> space{};

    static Amplitude constant(double c);
    static Amplitude age_polynomial(std::vector<double> coeffs);
    /// c * prod_k cos(m_k pi x_k / L_k); satisfies the homogeneous Neumann
    /// condition on the box.
    static Amplitude cosine_mode(double c, std::array<int, 2> modes, std::array<double, 2> extent);

    double value(double a, Point x) const;
    double d_age(double a, Point x) const;
    double d_space(int axis, double a, Point x) const;
    double laplacian(int dim, double a, Point x) const;

private:
    double poly(double a) const;
    double poly_d(double a) const;
    double space_value(Point x) const;
};

struct NoiseSpec {
    std::vector<Amplitude> amplitudes;
    bool neumann_compatible = true;

    int modes() const { return static_cast<int>(amplitudes.size()); }
    /// When neumann_compatible is set, samples grad mu_j . nu on every boundary
    /// face at every age node; ConfigError if any magnitude exceeds 1e-12.
    void check(const Grid& g) const;
};

/// SplitMix64 finaliser; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed for sub-stream `index` of `base` (per path, per mode).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// N independent Brownian increment sequences on a uniform time grid.
///
/// Node values beta_j(t_k) are authoritative: they are the running sums at
/// the finest level and are subsampled (not re-summed) under coarsening, so
/// shared nodes agree bit-for-bit across levels. Increments at a coarser level
/// are block sums of the finer increments.
class BrownianBundle {
public:
    BrownianBundle() = default;

    /// Mode j draws from a 64-bit Mersenne twister seeded by derive_seed(seed, j).
    static BrownianBundle sample(std::uint64_t seed, int n_modes, int n_steps, double T);
    /// Rebuilds from raw storage (file import); validates sizes.
    static BrownianBundle from_raw(std::uint64_t seed, int n_modes, int n_steps, double T,
                                   int level, std::vector<double> increments,
                                   std::vector<double> nodes);

    /// factor must be a power of two dividing steps().
    BrownianBundle coarsen(int factor) const;

    int modes() const { return modes_; }
    int steps() const { return steps_; }
    double T() const { return T_; }
    double dt() const { return T_ / steps_; }
    std::uint64_t seed() const { return seed_; }
    /// log2 of the total coarsening factor applied since sampling.
    int level() const { return level_; }

    double increment(int j, int k) const { return inc_[idx(j, k)]; }
    double beta(int j, int k) const { return nodes_[static_cast<std::size_t>(j) * (steps_ + 1) + k]; }
    std::span<const double> increments(int j) const {
        return {inc_.data() + idx(j, 0), static_cast<std::size_t>(steps_)};
    }
    std::span<const double> raw_increments() const { return inc_; }
    std::span<const double> raw_nodes() const { return nodes_; }

    /// Zeroes every increment (deterministic reduction runs).
    BrownianBundle zeroed() const;

    bool operator==(const BrownianBundle&) const = default;

private:
    std::size_t idx(int j, int k) const { return static_cast<std::size_t>(j) * steps_ + k; }

    int modes_ = 0;
    int steps_ = 0;
    double T_ = 0.0;
    std::uint64_t seed_ = 0;
    int level_ = 0;
    std::vector<double> inc_;
    std::vector<double> nodes_;
};

/// W and its derivatives at one time level.
struct NoiseFields {
    Field W;
    Field W_a;
    std::array<Field, 2> grad; // second entry unused for d = 1
    Field lap;
    /// W sampled on boundary faces, [age][face].
    std::vector<double> W_boundary;
};

/// Amplitudes and their derivatives tabulated once on a grid, so that W at
/// any time level is a linear combination with the beta_j(t) weights.
class NoiseTables {
public:
    NoiseTables(const NoiseSpec& spec, const Grid& g);

    const Grid& grid() const { return grid_; }
    int modes() const { return static_cast<int>(mu_.size()); }
    std::size_t faces() const { return faces_.size(); }
    const std::vector<Face>& face_list() const { return faces_; }

    /// Fields for explicit beta values (one per mode).
    NoiseFields fields(std::span<const double> beta) const;
    /// Fields at time node t_index of the bundle.
    NoiseFields fields(const BrownianBundle& b, int t_index) const;
    /// sum_j mu_j(a,x) * dbeta_j on cells.
    Field weighted_sum(std::span<const double> dbeta) const;

    const Field& amplitude(int j) const { return mu_[j]; }
    /// 1/2 sum_j mu_j^2.
    const Field& ito_correction() const { return ito_; }

private:
    Grid grid_;
    std::vector<Face> faces_;
    std::vector<Field> mu_, mu_a_, lap_;
    std::vector<std::array<Field, 2>> grad_;
    std::vector<std::vector<double>> boundary_;
    Field ito_;
};

/// W = sum_j mu_j beta_j(t) with W_a, grad W and Laplacian W.
NoiseFields eval_W(const NoiseSpec& spec, const BrownianBundle& b, const Grid& g, int t_index);

/// mu(a,x) = 1/2 sum_j mu_j(a,x)^2.
Field mu_field(const NoiseSpec& spec, const Grid& g);

/// ConfigError unless the bundle covers exactly the grid's time levels.
void require_compatible(const BrownianBundle& b, const NoiseSpec& spec, const Grid& g);

} // namespace spde
