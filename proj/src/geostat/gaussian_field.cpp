#include "ruq/geostat/gaussian_field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <fftw3.h>

#include "ruq/core/error.hpp"
#include "ruq/core/rng.hpp"

namespace ruq::geostat {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_mutex()
{
    static std::mutex m;
    return m;
}

double distance_cells(int di, int dj) { return std::sqrt(static_cast<double>(di * di + dj * dj)); }

} // namespace

CovarianceModel CovarianceModel::make(double variance, double correlation_length, Kernel kernel)
{
    if (!(variance >= 0.0) || !std::isfinite(variance)) throw InvalidArgument("covariance: variance must be >= 0");
    if (!(correlation_length > 0.0) || !std::isfinite(correlation_length))
        throw InvalidArgument("covariance: correlation length must be > 0");
    return CovarianceModel{variance, correlation_length, kernel};
}

double CovarianceModel::operator()(double distance) const noexcept
{
    const double r = distance / correlation_length;
    return kernel == Kernel::exponential ? variance * std::exp(-r) : variance * std::exp(-r * r);
}

CovarianceModel default_covariance(const Grid& grid)
{
    return CovarianceModel::make(1.0, 25.0 * grid.nx / 128.0, Kernel::exponential);
}

struct CirculantSampler::Plan {
    fftw_plan plan = nullptr;
};

CirculantSampler::CirculantSampler(const Grid& grid, const CovarianceModel& cov, int padding)
    : grid_(grid), plan_(std::make_unique<Plan>())
{
    if (padding < 1) throw InvalidArgument("circulant embedding: padding factor must be >= 1");
    m1_ = padding * grid.nx;
    m2_ = padding * grid.ny;
    const std::size_t total = static_cast<std::size_t>(m1_) * static_cast<std::size_t>(m2_);

    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    {
        std::lock_guard lock(fftw_mutex());
        plan_->plan = fftw_plan_dft_2d(m2_, m1_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (int b = 0; b < m2_; ++b) {
        const int db = std::min(b, m2_ - b);
        for (int a = 0; a < m1_; ++a) {
            const int da = std::min(a, m1_ - a);
            const std::size_t k = static_cast<std::size_t>(a) + static_cast<std::size_t>(b) * m1_;
            buf[k][0] = cov(distance_cells(da, db));
            buf[k][1] = 0.0;
        }
    }
    fftw_execute_dft(plan_->plan, buf, buf);

    double lmax = 0.0;
    double lmin = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        lmax = std::max(lmax, buf[k][0]);
        lmin = std::min(lmin, buf[k][0]);
    }
    min_ratio_ = lmax > 0.0 ? lmin / lmax : 0.0;
    if (lmax > 0.0 && lmin < -1e-8 * lmax) {
        fftw_free(buf);
        std::ostringstream os;
        os << "circulant embedding is not nonnegative definite (min/max eigenvalue " << min_ratio_
           << ", padding " << padding << "); increase padding";
        throw NumericalError(os.str());
    }
    sqrt_eigen_.resize(total);
    for (std::size_t k = 0; k < total; ++k)
        sqrt_eigen_[k] = std::sqrt(std::max(buf[k][0], 0.0) / static_cast<double>(total));
    fftw_free(buf);
}

CirculantSampler::~CirculantSampler()
{
    if (plan_ && plan_->plan) {
        std::lock_guard lock(fftw_mutex());
        fftw_destroy_plan(plan_->plan);
    }
}

ScalarField CirculantSampler::sample(std::uint64_t seed) const
{
    const std::size_t total = sqrt_eigen_.size();
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < total; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        buf[k][0] = sqrt_eigen_[k] * re;
        buf[k][1] = sqrt_eigen_[k] * im;
    }
    fftw_execute_dft(plan_->plan, buf, buf);
    std::vector<double> values(grid_.cells());
    for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx; ++i)
            values[grid_.index(i, j)] = buf[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * m1_][0];
    fftw_free(buf);
    return ScalarField(grid_, std::move(values));
}

std::vector<double> covariance_matrix(const Grid& grid, const CovarianceModel& cov)
{
    const std::size_t n = grid.cells();
    std::vector<double> c(n * n);
    for (int jb = 0; jb < grid.ny; ++jb)
        for (int ib = 0; ib < grid.nx; ++ib)
            for (int ja = 0; ja < grid.ny; ++ja)
                for (int ia = 0; ia < grid.nx; ++ia)
                    c[grid.index(ia, ja) * n + grid.index(ib, jb)] = cov(distance_cells(ia - ib, ja - jb));
    return c;
}

CholeskySampler::CholeskySampler(const Grid& grid, const CovarianceModel& cov) : grid_(grid)
{
    const auto n = static_cast<Eigen::Index>(grid.cells());
    const std::vector<double> c = covariance_matrix(grid, cov);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> cm(c.data(), n, n);
    lower_.assign(c.size(), 0.0);
    if (cov.variance == 0.0) return;
    Eigen::LLT<Eigen::MatrixXd> llt(cm);
    if (llt.info() != Eigen::Success) throw NumericalError("dense covariance is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index q = 0; q <= r; ++q) lower_[static_cast<std::size_t>(r * n + q)] = l(r, q);
}

ScalarField CholeskySampler::sample(std::uint64_t seed) const
{
    const std::size_t n = grid_.cells();
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> xi(n);
    for (auto& v : xi) v = normal(rng);
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        const double* row = lower_.data() + r * n;
        for (std::size_t q = 0; q <= r; ++q) s += row[q] * xi[q];
        out[r] = s;
    }
    return ScalarField(grid_, std::move(out));
}

namespace {

using CacheKey = std::tuple<int, int, double, double, int, int, int>;

struct SamplerEntry {
    std::shared_ptr<const CirculantSampler> circulant;
    std::shared_ptr<const CholeskySampler> cholesky;
};

SamplerEntry build_entry(const Grid& grid, const CovarianceModel& cov, const SamplerOptions& options)
{
    SamplerEntry e;
    const bool small = grid.nx <= cholesky_max_extent && grid.ny <= cholesky_max_extent;
    switch (options.method) {
    case SamplingMethod::circulant:
        e.circulant = std::make_shared<CirculantSampler>(grid, cov, options.padding);
        break;
    case SamplingMethod::cholesky:
        if (!small) throw InvalidArgument("dense Cholesky sampling is limited to 48x48 grids");
        e.cholesky = std::make_shared<CholeskySampler>(grid, cov);
        break;
    case SamplingMethod::automatic:
        try {
            e.circulant = std::make_shared<CirculantSampler>(grid, cov, options.padding);
        } catch (const NumericalError&) {
            if (!small) throw;
            e.cholesky = std::make_shared<CholeskySampler>(grid, cov);
        }
        break;
    }
    return e;
}

} // namespace

ScalarField sample_gaussian_field(const Grid& grid, const CovarianceModel& cov, std::uint64_t seed,
                                  const SamplerOptions& options)
{
    if (cov.variance == 0.0) return ScalarField::constant(grid, 0.0);

    static std::mutex mutex;
    static std::map<CacheKey, SamplerEntry> cache;
    const CacheKey key{grid.nx, grid.ny, cov.variance, cov.correlation_length, static_cast<int>(cov.kernel),
                       options.padding, static_cast<int>(options.method)};
    SamplerEntry entry;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(key);
        if (it == cache.end()) {
            if (cache.size() > 32) cache.clear();
            it = cache.emplace(key, build_entry(grid, cov, options)).first;
        }
        entry = it->second;
    }
    ScalarField f = entry.circulant ? entry.circulant->sample(seed) : entry.cholesky->sample(seed);
    // Cache entries are keyed on extents only; rebind to the caller's grid geometry.
    return ScalarField(grid, std::vector<double>(f.values().begin(), f.values().end()));
}

PermField PermField::make(ScalarField field, std::uint64_t seed)
{
    for (double k : field.values()) {
        if (!(k >= perm_min_md && k <= perm_max_md))
            throw InvalidArgument("permeability outside [0.001, 200] mD: " + std::to_string(k));
    }
    return PermField{std::move(field), seed};
}

PermField to_permeability(const ScalarField& z, double mu_log, double sigma_log, std::uint64_t seed)
{
    std::vector<double> k(z.size());
    for (std::size_t c = 0; c < k.size(); ++c)
        k[c] = std::clamp(std::exp(mu_log + sigma_log * z[c]), perm_min_md, perm_max_md);
    return PermField::make(ScalarField(z.grid(), std::move(k)), seed);
}

PermModel PermModel::defaults(const Grid& grid) { return PermModel{default_covariance(grid), std::log(10.0), 1.5}; }

PermField sample_permeability(const Grid& grid, const PermModel& model, std::uint64_t seed)
{
    return to_permeability(sample_gaussian_field(grid, model.cov, seed), model.mu_log, model.sigma_log, seed);
}

double empirical_covariance(std::span<const ScalarField> samples, int lag)
{
    if (samples.size() < 2) throw InvalidArgument("empirical_covariance: need at least 2 samples");
    const Grid& grid = samples.front().grid();
    if (lag < 0 || lag >= grid.nx) throw InvalidArgument("empirical_covariance: lag must lie in [0, nx)");
    for (const auto& s : samples)
        if (!(s.grid() == grid)) throw InvalidArgument("empirical_covariance: grid mismatch");

    const std::size_t n = grid.cells();
    std::vector<double> mean(n, 0.0);
    for (const auto& s : samples)
        for (std::size_t c = 0; c < n; ++c) mean[c] += s[c];
    for (auto& m : mean) m /= static_cast<double>(samples.size());

    double acc = 0.0;
    std::size_t pairs = 0;
    for (const auto& s : samples) {
        for (int j = 0; j < grid.ny; ++j) {
            for (int i = 0; i + lag < grid.nx; ++i) {
                const std::size_t a = grid.index(i, j);
                const std::size_t b = grid.index(i + lag, j);
                acc += (s[a] - mean[a]) * (s[b] - mean[b]);
            }
        }
    }
    pairs = static_cast<std::size_t>(grid.ny) * static_cast<std::size_t>(grid.nx - lag);
    return acc / (static_cast<double>(samples.size() - 1) * static_cast<double>(pairs));
}

} // namespace ruq::geostat
