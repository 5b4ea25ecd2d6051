// Portable reference kernels. These define the results the vector variants are
// tested against.

#include "ruq/simd/kernels.hpp"

namespace ruq::simd::detail {

namespace {

template <class T>
void gemm_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool accumulate)
{
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        if (!accumulate)
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        const T* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

void gemm_f32_scalar(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                     bool accumulate)
{
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_f64_scalar(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc,
                     bool accumulate)
{
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

double dot_f64_scalar(const double* x, const double* y, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_f64_scalar(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_f64_scalar(const double* x, double beta, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

} // namespace ruq::simd::detail
