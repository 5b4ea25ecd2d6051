#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ruq/core/field.hpp"

namespace ruq::geostat {

enum class Kernel { exponential, gaussian };

/// Stationary isotropic covariance; correlation length is measured in cells.
struct CovarianceModel {
    double variance = 1.0;
    double correlation_length = 1.0;
    Kernel kernel = Kernel::exponential;

    /// Throws InvalidArgument unless variance >= 0 and correlation_length > 0.
    static CovarianceModel make(double variance, double correlation_length, Kernel kernel);

    /// Covariance at a separation of `distance` cells.
    double operator()(double distance) const noexcept;
};

/// Default desk-scale model: unit variance, exponential kernel, length 25 * nx / 128 cells.
CovarianceModel default_covariance(const Grid& grid);

enum class SamplingMethod { automatic, circulant, cholesky };

struct SamplerOptions {
    int padding = 2;                                  // circulant embedding size factor per axis
    SamplingMethod method = SamplingMethod::automatic; // automatic: circulant, Cholesky fallback on small grids
};

/// Largest grid (cells per axis) for which the dense Cholesky fallback is allowed.
inline constexpr int cholesky_max_extent = 48;

/// Exact sampler by circulant embedding on a padded periodic grid.
/// Throws NumericalError if an embedded eigenvalue is below -1e-8 * max (padding too small).
class CirculantSampler {
public:
    CirculantSampler(const Grid& grid, const CovarianceModel& cov, int padding = 2);
    ~CirculantSampler();
    CirculantSampler(const CirculantSampler&) = delete;
    CirculantSampler& operator=(const CirculantSampler&) = delete;

    ScalarField sample(std::uint64_t seed) const;

    /// Smallest embedded eigenvalue relative to the largest (before clamping).
    double min_eigen_ratio() const noexcept { return min_ratio_; }

private:
    struct Plan;
    Grid grid_;
    int m1_ = 0;
    int m2_ = 0;
    std::vector<double> sqrt_eigen_; // sqrt(max(lambda, 0) / (m1 * m2))
    double min_ratio_ = 0.0;
    std::unique_ptr<Plan> plan_;
};

/// Dense Cholesky sampler; cost O(cells^3) once, O(cells^2) per sample.
class CholeskySampler {
public:
    CholeskySampler(const Grid& grid, const CovarianceModel& cov);
    ScalarField sample(std::uint64_t seed) const;

private:
    Grid grid_;
    std::vector<double> lower_; // row-major n x n
};

/// Dense covariance matrix C[a][b] = cov(|x_a - x_b|) over all cell pairs, row-major.
std::vector<double> covariance_matrix(const Grid& grid, const CovarianceModel& cov);

/// Zero-mean stationary Gaussian sample, reproducible from seed. Samplers are cached
/// per (grid, covariance, options), so repeated calls are cheap.
ScalarField sample_gaussian_field(const Grid& grid, const CovarianceModel& cov, std::uint64_t seed,
                                  const SamplerOptions& options = {});

inline constexpr double perm_min_md = 0.001;
inline constexpr double perm_max_md = 200.0;

/// Permeability realization in millidarcy, tagged with the seed that produced it.
struct PermField {
    ScalarField field;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument if any value is outside [perm_min_md, perm_max_md].
    static PermField make(ScalarField field, std::uint64_t seed);
};

/// k = clip(exp(mu_log + sigma_log * z), 0.001, 200) millidarcy.
PermField to_permeability(const ScalarField& z, double mu_log, double sigma_log, std::uint64_t seed = 0);

/// Log-normal permeability model; defaults: ln(10 mD) mean, 1.5 log-std.
struct PermModel {
    CovarianceModel cov;
    double mu_log;
    double sigma_log = 1.5;

    static PermModel defaults(const Grid& grid);
};

PermField sample_permeability(const Grid& grid, const PermModel& model, std::uint64_t seed);

/// Mean-removed covariance at x-offset `lag`, averaged over samples and cell pairs
/// (unbiased over samples). Lag 0 gives the empirical variance.
/// Throws InvalidArgument for fewer than 2 samples, lag >= nx, or mismatched grids.
double empirical_covariance(std::span<const ScalarField> samples, int lag);

} // namespace ruq::geostat
