// AVX2 + FMA kernels. Compiled with target attributes so the rest of the
// library stays baseline x86-64; only called after a runtime CPU check.

#include "ruq/simd/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <algorithm>
#include <immintrin.h>

#define RUQ_AVX2 __attribute__((target("avx2,fma")))

namespace ruq::simd::detail {

namespace {

constexpr int kc_block = 256;

RUQ_AVX2 inline void tile_f32_4x16(int kc, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                                   bool add)
{
    __m256 c00, c01, c10, c11, c20, c21, c30, c31;
    if (add) {
        c00 = _mm256_loadu_ps(c);
        c01 = _mm256_loadu_ps(c + 8);
        c10 = _mm256_loadu_ps(c + ldc);
        c11 = _mm256_loadu_ps(c + ldc + 8);
        c20 = _mm256_loadu_ps(c + 2 * ldc);
        c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
        c30 = _mm256_loadu_ps(c + 3 * ldc);
        c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
    } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_ps();
    }
    const float* a0 = a;
    const float* a1 = a + lda;
    const float* a2 = a + 2 * lda;
    const float* a3 = a + 3 * lda;
    for (int p = 0; p < kc; ++p) {
        const float* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        __m256 av = _mm256_broadcast_ss(a0 + p);
        c00 = _mm256_fmadd_ps(av, b0, c00);
        c01 = _mm256_fmadd_ps(av, b1, c01);
        av = _mm256_broadcast_ss(a1 + p);
        c10 = _mm256_fmadd_ps(av, b0, c10);
        c11 = _mm256_fmadd_ps(av, b1, c11);
        av = _mm256_broadcast_ss(a2 + p);
        c20 = _mm256_fmadd_ps(av, b0, c20);
        c21 = _mm256_fmadd_ps(av, b1, c21);
        av = _mm256_broadcast_ss(a3 + p);
        c30 = _mm256_fmadd_ps(av, b0, c30);
        c31 = _mm256_fmadd_ps(av, b1, c31);
    }
    _mm256_storeu_ps(c, c00);
    _mm256_storeu_ps(c + 8, c01);
    _mm256_storeu_ps(c + ldc, c10);
    _mm256_storeu_ps(c + ldc + 8, c11);
    _mm256_storeu_ps(c + 2 * ldc, c20);
    _mm256_storeu_ps(c + 2 * ldc + 8, c21);
    _mm256_storeu_ps(c + 3 * ldc, c30);
    _mm256_storeu_ps(c + 3 * ldc + 8, c31);
}

RUQ_AVX2 inline void tile_f32_1x16(int kc, const float* a, const float* b, int ldb, float* c, bool add)
{
    __m256 c0 = add ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
    __m256 c1 = add ? _mm256_loadu_ps(c + 8) : _mm256_setzero_ps();
    for (int p = 0; p < kc; ++p) {
        const float* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256 av = _mm256_broadcast_ss(a + p);
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + 8), c1);
    }
    _mm256_storeu_ps(c, c0);
    _mm256_storeu_ps(c + 8, c1);
}

RUQ_AVX2 inline void tile_f32_1x8(int kc, const float* a, const float* b, int ldb, float* c, bool add)
{
    __m256 c0 = add ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
    for (int p = 0; p < kc; ++p) {
        const __m256 av = _mm256_broadcast_ss(a + p);
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + static_cast<std::ptrdiff_t>(p) * ldb), c0);
    }
    _mm256_storeu_ps(c, c0);
}

RUQ_AVX2 inline void tile_f64_4x8(int kc, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
                                  bool add)
{
    __m256d c00, c01, c10, c11, c20, c21, c30, c31;
    if (add) {
        c00 = _mm256_loadu_pd(c);
        c01 = _mm256_loadu_pd(c + 4);
        c10 = _mm256_loadu_pd(c + ldc);
        c11 = _mm256_loadu_pd(c + ldc + 4);
        c20 = _mm256_loadu_pd(c + 2 * ldc);
        c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
        c30 = _mm256_loadu_pd(c + 3 * ldc);
        c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
    }
    for (int p = 0; p < kc; ++p) {
        const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d av = _mm256_broadcast_sd(a + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a + lda + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a + 2 * lda + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a + 3 * lda + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
    }
    _mm256_storeu_pd(c, c00);
    _mm256_storeu_pd(c + 4, c01);
    _mm256_storeu_pd(c + ldc, c10);
    _mm256_storeu_pd(c + ldc + 4, c11);
    _mm256_storeu_pd(c + 2 * ldc, c20);
    _mm256_storeu_pd(c + 2 * ldc + 4, c21);
    _mm256_storeu_pd(c + 3 * ldc, c30);
    _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

RUQ_AVX2 inline void tile_f64_1x8(int kc, const double* a, const double* b, int ldb, double* c, bool add)
{
    __m256d c0 = add ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
    __m256d c1 = add ? _mm256_loadu_pd(c + 4) : _mm256_setzero_pd();
    for (int p = 0; p < kc; ++p) {
        const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
        const __m256d av = _mm256_broadcast_sd(a + p);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
    }
    _mm256_storeu_pd(c, c0);
    _mm256_storeu_pd(c + 4, c1);
}

RUQ_AVX2 inline void tile_f64_1x4(int kc, const double* a, const double* b, int ldb, double* c, bool add)
{
    __m256d c0 = add ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
    for (int p = 0; p < kc; ++p) {
        const __m256d av = _mm256_broadcast_sd(a + p);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<std::ptrdiff_t>(p) * ldb), c0);
    }
    _mm256_storeu_pd(c, c0);
}

template <class T>
inline void tail_columns(int m, int j0, int n, int kc, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
                         bool add)
{
    for (int i = 0; i < m; ++i) {
        for (int j = j0; j < n; ++j) {
            T s = add ? c[static_cast<std::ptrdiff_t>(i) * ldc + j] : T(0);
            for (int p = 0; p < kc; ++p)
                s += a[static_cast<std::ptrdiff_t>(i) * lda + p] * b[static_cast<std::ptrdiff_t>(p) * ldb + j];
            c[static_cast<std::ptrdiff_t>(i) * ldc + j] = s;
        }
    }
}

template <class T>
inline void zero_matrix(int m, int n, T* c, int ldc)
{
    for (int i = 0; i < m; ++i) std::fill(c + static_cast<std::ptrdiff_t>(i) * ldc, c + static_cast<std::ptrdiff_t>(i) * ldc + n, T(0));
}

} // namespace

RUQ_AVX2 void gemm_f32_avx2(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                            int ldc, bool accumulate)
{
    if (k == 0) {
        if (!accumulate) zero_matrix(m, n, c, ldc);
        return;
    }
    for (int k0 = 0; k0 < k; k0 += kc_block) {
        const int kc = std::min(kc_block, k - k0);
        const bool add = accumulate || k0 > 0;
        const float* ak = a + k0;
        const float* bk = b + static_cast<std::ptrdiff_t>(k0) * ldb;
        int j = 0;
        for (; j + 16 <= n; j += 16) {
            int i = 0;
            for (; i + 4 <= m; i += 4)
                tile_f32_4x16(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, lda, bk + j, ldb,
                              c + static_cast<std::ptrdiff_t>(i) * ldc + j, ldc, add);
            for (; i < m; ++i)
                tile_f32_1x16(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, bk + j, ldb,
                              c + static_cast<std::ptrdiff_t>(i) * ldc + j, add);
        }
        for (; j + 8 <= n; j += 8)
            for (int i = 0; i < m; ++i)
                tile_f32_1x8(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, bk + j, ldb,
                             c + static_cast<std::ptrdiff_t>(i) * ldc + j, add);
        if (j < n) tail_columns(m, j, n, kc, ak, lda, bk, ldb, c, ldc, add);
    }
}

RUQ_AVX2 void gemm_f64_avx2(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
                            int ldc, bool accumulate)
{
    if (k == 0) {
        if (!accumulate) zero_matrix(m, n, c, ldc);
        return;
    }
    for (int k0 = 0; k0 < k; k0 += kc_block) {
        const int kc = std::min(kc_block, k - k0);
        const bool add = accumulate || k0 > 0;
        const double* ak = a + k0;
        const double* bk = b + static_cast<std::ptrdiff_t>(k0) * ldb;
        int j = 0;
        for (; j + 8 <= n; j += 8) {
            int i = 0;
            for (; i + 4 <= m; i += 4)
                tile_f64_4x8(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, lda, bk + j, ldb,
                             c + static_cast<std::ptrdiff_t>(i) * ldc + j, ldc, add);
            for (; i < m; ++i)
                tile_f64_1x8(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, bk + j, ldb,
                             c + static_cast<std::ptrdiff_t>(i) * ldc + j, add);
        }
        for (; j + 4 <= n; j += 4)
            for (int i = 0; i < m; ++i)
                tile_f64_1x4(kc, ak + static_cast<std::ptrdiff_t>(i) * lda, bk + j, ldb,
                             c + static_cast<std::ptrdiff_t>(i) * ldc + j, add);
        if (j < n) tail_columns(m, j, n, kc, ak, lda, bk, ldb, c, ldc, add);
    }
}

RUQ_AVX2 double dot_f64_avx2(const double* x, const double* y, std::size_t n)
{
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
    }
    s0 = _mm256_add_pd(s0, s1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, s0);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

RUQ_AVX2 void axpy_f64_avx2(double alpha, const double* x, double* y, std::size_t n)
{
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

RUQ_AVX2 void xpby_f64_avx2(const double* x, double beta, double* y, std::size_t n)
{
    const __m256d bv = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(bv, _mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

} // namespace ruq::simd::detail

#endif
