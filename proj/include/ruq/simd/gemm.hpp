#pragma once

#include <algorithm>
#include <type_traits>
#include <vector>

#include "ruq/simd/kernels.hpp"

namespace ruq::simd {

/// C = (accumulate ? C : 0) + op(A) * op(B) with row-major storage; dispatched to the active ISA.
template <class T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool accumulate)
{
    if constexpr (std::is_same_v<T, float>)
        active().gemm_f32(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    else
        active().gemm_f64(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

/// Row-major transpose of a rows x cols matrix into out (cols x rows).
template <class T>
void transpose(int rows, int cols, const T* in, int ld_in, T* out)
{
    constexpr int blk = 32;
    for (int r0 = 0; r0 < rows; r0 += blk)
        for (int c0 = 0; c0 < cols; c0 += blk)
            for (int r = r0; r < std::min(rows, r0 + blk); ++r)
                for (int c = c0; c < std::min(cols, c0 + blk); ++c) out[c * rows + r] = in[r * ld_in + c];
}

/// C[m x n] (+)= A^T * B where A is stored k x m.
template <class T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool accumulate,
             std::vector<T>& scratch)
{
    scratch.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(k));
    transpose(k, m, a, lda, scratch.data());
    gemm_nn(m, n, k, scratch.data(), k, b, ldb, c, ldc, accumulate);
}

/// C[m x n] (+)= A * B^T where B is stored n x k.
template <class T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool accumulate,
             std::vector<T>& scratch)
{
    scratch.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
    transpose(n, k, b, ldb, scratch.data());
    gemm_nn(m, n, k, a, lda, scratch.data(), n, c, ldc, accumulate);
}

} // namespace ruq::simd
