#include <array>
// Scalar reference kernels vs the vector variants selected at runtime.

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ruq/core/rng.hpp"
#include "ruq/simd/gemm.hpp"
#include "ruq/simd/kernels.hpp"

using namespace ruq;
using namespace ruq::simd;

namespace {

template <class T>
std::vector<T> random_vec(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(u(rng));
    return v;
}

template <class T>
void check_gemm_equivalence(const KernelTable& ref, const KernelTable& vec, double tol)
{
    const std::array<std::array<int, 3>, 9> sizes{{{1, 1, 1}, {4, 16, 3}, {5, 17, 9}, {7, 33, 300}, {16, 64, 72},
                                                  {3, 8, 0}, {9, 12, 513}, {13, 5, 2}, {64, 4, 2304}}};
    for (auto [m, n, k] : sizes) {
        for (bool acc : {false, true}) {
            // Leading dimensions wider than the logical extents exercise strided access.
            const int lda = k + 3, ldb = n + 5, ldc = n + 2;
            auto a = random_vec<T>(static_cast<std::size_t>(m) * lda, 1);
            auto b = random_vec<T>(static_cast<std::size_t>(std::max(k, 1)) * ldb, 2);
            auto c0 = random_vec<T>(static_cast<std::size_t>(m) * ldc, 3);
            auto c1 = c0;
            if constexpr (std::is_same_v<T, float>) {
                ref.gemm_f32(m, n, k, a.data(), lda, b.data(), ldb, c0.data(), ldc, acc);
                vec.gemm_f32(m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc, acc);
            } else {
                ref.gemm_f64(m, n, k, a.data(), lda, b.data(), ldb, c0.data(), ldc, acc);
                vec.gemm_f64(m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc, acc);
            }
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < ldc; ++j) {
                    const auto x = c0[static_cast<std::size_t>(i * ldc + j)];
                    const auto y = c1[static_cast<std::size_t>(i * ldc + j)];
                    if (j >= n) {
                        CHECK(x == y); // padding columns untouched
                    } else {
                        CHECK(std::abs(double(x) - double(y)) <= tol * (1.0 + std::sqrt(double(k))));
                    }
                }
            }
        }
    }
}

} // namespace

TEST_CASE("isa names round trip")
{
    CHECK(parse_isa("scalar") == Isa::scalar);
    CHECK(parse_isa("avx2") == Isa::avx2);
    CHECK_FALSE(parse_isa("sse9").has_value());
    CHECK(isa_supported(Isa::scalar));
}

TEST_CASE("gemm reference matches a triple loop")
{
    const int m = 5, n = 7, k = 11;
    auto a = random_vec<double>(m * k, 4);
    auto b = random_vec<double>(k * n, 5);
    std::vector<double> c(m * n);
    table(Isa::scalar).gemm_f64(m, n, k, a.data(), k, b.data(), n, c.data(), n, false);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
        }
}

TEST_CASE("vector kernels agree with scalar reference")
{
    if (!isa_supported(Isa::avx2)) {
        MESSAGE("AVX2 not available; equivalence test skipped");
        return;
    }
    const auto& ref = table(Isa::scalar);
    const auto& vec = table(Isa::avx2);

    SUBCASE("gemm f32") { check_gemm_equivalence<float>(ref, vec, 2e-6); }
    SUBCASE("gemm f64") { check_gemm_equivalence<double>(ref, vec, 1e-14); }

    SUBCASE("dot/axpy/xpby f64")
    {
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 100u, 1027u}) {
            auto x = random_vec<double>(n, 10 + n);
            auto y = random_vec<double>(n, 20 + n);
            CHECK(ref.dot_f64(x.data(), y.data(), n) ==
                  doctest::Approx(vec.dot_f64(x.data(), y.data(), n)).epsilon(1e-13));
            auto y0 = y, y1 = y;
            ref.axpy_f64(0.37, x.data(), y0.data(), n);
            vec.axpy_f64(0.37, x.data(), y1.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(y0[i] == doctest::Approx(y1[i]).epsilon(1e-15));
            y0 = y;
            y1 = y;
            ref.xpby_f64(x.data(), -1.25, y0.data(), n);
            vec.xpby_f64(x.data(), -1.25, y1.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(y0[i] == doctest::Approx(y1[i]).epsilon(1e-15));
        }
    }
}

TEST_CASE("transposed gemm wrappers")
{
    const int m = 6, n = 9, k = 5;
    auto at = random_vec<double>(k * m, 30); // A^T stored k x m
    auto b = random_vec<double>(k * n, 31);
    auto bt = random_vec<double>(n * k, 32); // B^T stored n x k
    auto a = random_vec<double>(m * k, 33);
    std::vector<double> c(m * n), scratch;
    gemm_tn(m, n, k, at.data(), m, b.data(), n, c.data(), n, false, scratch);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += at[p * m + i] * b[p * n + j];
            CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-13));
        }
    gemm_nt(m, n, k, a.data(), k, bt.data(), k, c.data(), n, false, scratch);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[i * k + p] * bt[j * k + p];
            CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-13));
        }
}

TEST_CASE("active table can be switched")
{
    const Isa before = active().isa;
    set_active(Isa::scalar);
    CHECK(active().isa == Isa::scalar);
    set_active(before);
    CHECK(active().isa == before);
}
