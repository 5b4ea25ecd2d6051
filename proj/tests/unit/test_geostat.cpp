#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ruq/core/error.hpp"
#include "ruq/core/rng.hpp"
#include "ruq/geostat/gaussian_field.hpp"

using namespace ruq;
using namespace ruq::geostat;

TEST_CASE("covariance model validation")
{
    CHECK_THROWS_AS(CovarianceModel::make(-1.0, 2.0, Kernel::exponential), InvalidArgument);
    CHECK_THROWS_AS(CovarianceModel::make(1.0, 0.0, Kernel::gaussian), InvalidArgument);
    const auto c = CovarianceModel::make(2.0, 4.0, Kernel::exponential);
    CHECK(c(0.0) == 2.0);
    CHECK(c(4.0) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK(default_covariance(Grid::square(32)).correlation_length == doctest::Approx(6.25));
}

TEST_CASE("zero variance gives an all-zero field")
{
    const Grid g = Grid::square(16);
    const auto f = sample_gaussian_field(g, CovarianceModel::make(0.0, 3.0, Kernel::exponential), 5);
    for (double v : f.values()) CHECK(v == 0.0);
}

TEST_CASE("samples are seed-deterministic")
{
    const Grid g = Grid::square(32);
    const auto cov = default_covariance(g);
    const auto a = sample_gaussian_field(g, cov, 11);
    const auto b = sample_gaussian_field(g, cov, 11);
    const auto c = sample_gaussian_field(g, cov, 12);
    CHECK(a == b);
    bool differs = false;
    for (std::size_t k = 0; k < a.size(); ++k) differs = differs || a[k] != c[k];
    CHECK(differs);
}

TEST_CASE("embedding diagnostic and Cholesky fallback")
{
    // Correlation length half the grid: padding 2 is not enough for circulant embedding.
    const Grid g = Grid::square(16);
    const auto cov = CovarianceModel::make(1.0, 8.0, Kernel::exponential);
    CHECK_THROWS_AS(CirculantSampler(g, cov, 2), NumericalError);
    CHECK_THROWS_AS(sample_gaussian_field(g, cov, 1, {2, SamplingMethod::circulant}), NumericalError);
    const auto f = sample_gaussian_field(g, cov, 1); // automatic: falls back to dense Cholesky
    CHECK(f == sample_gaussian_field(g, cov, 1, {2, SamplingMethod::cholesky}));
    CHECK(CirculantSampler(Grid::square(32), CovarianceModel::make(1.0, 4.0, Kernel::exponential), 2).min_eigen_ratio() >=
          -1e-8);

    const Grid big = Grid::square(64);
    CHECK_THROWS_AS(sample_gaussian_field(big, cov, 1, {2, SamplingMethod::cholesky}), InvalidArgument);
}

TEST_CASE("pointwise variance and lag correlation (2000 samples, 32x32, l = 8)")
{
    const Grid g = Grid::square(32);
    const auto cov = CovarianceModel::make(1.0, 8.0, Kernel::exponential);
    const int n = 2000;
    std::vector<ScalarField> samples;
    samples.reserve(n);
    for (int s = 0; s < n; ++s) samples.push_back(sample_gaussian_field(g, cov, stream_seed(42, "geostat-test", s)));

    // Per-cell sample variance; standard error of a variance estimate is sigma^2 sqrt(2 / (n - 1)).
    const double se = cov.variance * std::sqrt(2.0 / (n - 1));
    double mean_var = 0.0;
    int outside = 0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
        double m = 0.0, m2 = 0.0;
        for (const auto& f : samples) m += f[c];
        m /= n;
        for (const auto& f : samples) m2 += (f[c] - m) * (f[c] - m);
        const double var = m2 / (n - 1);
        mean_var += var;
        if (std::abs(var - cov.variance) > 3.0 * se) ++outside;
    }
    mean_var /= static_cast<double>(g.cells());
    CHECK(std::abs(mean_var - cov.variance) <= 3.0 * se);
    CHECK(outside <= static_cast<int>(0.01 * g.cells()));

    const double c0 = empirical_covariance(samples, 0);
    const double cl = empirical_covariance(samples, 8);
    CHECK(std::abs(cl / c0 - std::exp(-1.0)) <= 0.05);
}

TEST_CASE("empirical covariance matrix matches dense target (16x16, 5000 samples)")
{
    const Grid g = Grid::square(16);
    const auto cov = CovarianceModel::make(1.0, 4.0, Kernel::exponential);
    const int n = 5000;
    const std::size_t cells = g.cells();
    std::vector<double> sum(cells, 0.0), prod(cells * cells, 0.0);
    for (int s = 0; s < n; ++s) {
        const auto f = sample_gaussian_field(g, cov, stream_seed(1, "geostat-cov", s));
        for (std::size_t a = 0; a < cells; ++a) {
            sum[a] += f[a];
            for (std::size_t b = 0; b <= a; ++b) prod[a * cells + b] += f[a] * f[b];
        }
    }
    const auto target = covariance_matrix(g, cov);
    double worst = 0.0;
    for (std::size_t a = 0; a < cells; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            const double emp = (prod[a * cells + b] - sum[a] * sum[b] / n) / (n - 1);
            worst = std::max(worst, std::abs(emp - target[a * cells + b]));
        }
    MESSAGE("max entrywise covariance deviation: " << worst);
    CHECK(worst <= 0.08 * cov.variance);
}

TEST_CASE("to_permeability")
{
    const Grid g = Grid::square(8);
    const double mu = std::log(10.0);

    SUBCASE("zero field")
    {
        const auto k = to_permeability(ScalarField::constant(g, 0.0), mu, 1.5);
        for (double v : k.field.values()) CHECK(v == std::exp(mu));
    }
    SUBCASE("clamp upper and lower")
    {
        // exp(mu + 1.5 z) = 1e6  ->  z = (ln 1e6 - mu) / 1.5
        const double z_hi = (std::log(1e6) - mu) / 1.5;
        CHECK(to_permeability(ScalarField::constant(g, z_hi), mu, 1.5).field.max() == perm_max_md);
        CHECK(to_permeability(ScalarField::constant(g, -20.0), mu, 1.5).field.min() == perm_min_md);
    }
    SUBCASE("elementwise oracle")
    {
        Rng rng(3);
        std::normal_distribution<double> nd(0.0, 2.0);
        std::vector<double> z(g.cells());
        for (auto& v : z) v = nd(rng);
        const auto k = to_permeability(ScalarField(g, z), mu, 1.5, 99);
        CHECK(k.seed == 99);
        for (std::size_t c = 0; c < z.size(); ++c) {
            double e = std::exp(mu + 1.5 * z[c]);
            e = e < 0.001 ? 0.001 : (e > 200.0 ? 200.0 : e);
            CHECK(k.field[c] == e);
        }
    }
    SUBCASE("PermField rejects out-of-range values")
    {
        CHECK_THROWS_AS(PermField::make(ScalarField::constant(g, 500.0), 1), InvalidArgument);
        CHECK_THROWS_AS(PermField::make(ScalarField::constant(g, 0.0), 1), InvalidArgument);
    }
}

TEST_CASE("permeability bounds hold over 1000 seeds")
{
    const Grid g = Grid::square(16);
    const auto model = PermModel::defaults(g);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto k = sample_permeability(g, model, stream_seed(5, "perm", s));
        REQUIRE(k.field.min() >= perm_min_md);
        REQUIRE(k.field.max() <= perm_max_md);
    }
}

TEST_CASE("empirical_covariance")
{
    const Grid g = Grid::square(8);
    SUBCASE("constant fields give zero")
    {
        const std::vector<ScalarField> s(3, ScalarField::constant(g, 4.0));
        CHECK(empirical_covariance(s, 0) == 0.0);
        CHECK(empirical_covariance(s, 3) == 0.0);
    }
    SUBCASE("lag zero equals the sample variance")
    {
        std::vector<ScalarField> s;
        Rng rng(8);
        std::normal_distribution<double> nd(1.0, 2.0);
        for (int k = 0; k < 5; ++k) {
            std::vector<double> v(g.cells());
            for (auto& x : v) x = nd(rng);
            s.emplace_back(g, v);
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < g.cells(); ++c) {
            double m = 0.0;
            for (const auto& f : s) m += f[c];
            m /= 5.0;
            for (const auto& f : s) acc += (f[c] - m) * (f[c] - m);
        }
        CHECK(empirical_covariance(s, 0) == doctest::Approx(acc / (4.0 * g.cells())).epsilon(1e-12));
    }
    SUBCASE("white noise has no lag correlation")
    {
        const Grid gw = Grid::square(32);
        const int n = 400;
        std::vector<ScalarField> s;
        Rng rng(9);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int k = 0; k < n; ++k) {
            std::vector<double> v(gw.cells());
            for (auto& x : v) x = nd(rng);
            s.emplace_back(gw, v);
        }
        for (int lag : {1, 2, 5}) {
            const double se = 1.0 / std::sqrt(static_cast<double>(n) * gw.ny * (gw.nx - lag));
            CHECK(std::abs(empirical_covariance(s, lag)) < 3.0 * se);
        }
    }
    SUBCASE("errors")
    {
        const std::vector<ScalarField> one(1, ScalarField::constant(g, 1.0));
        CHECK_THROWS_AS(empirical_covariance(one, 0), InvalidArgument);
        CHECK_THROWS_AS(empirical_covariance(std::vector<ScalarField>{}, 0), InvalidArgument);
        const std::vector<ScalarField> two(2, ScalarField::constant(g, 1.0));
        CHECK_THROWS_AS(empirical_covariance(two, 8), InvalidArgument);
    }
}
