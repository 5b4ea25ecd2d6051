#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace ruq::simd {

enum class Isa { scalar, avx2 };

// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n], all row-major with leading dimensions.
using GemmF32 = void (*)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                         bool accumulate);
using GemmF64 = void (*)(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
                         int ldc, bool accumulate);
using DotF64 = double (*)(const double* x, const double* y, std::size_t n);
// y += alpha * x
using AxpyF64 = void (*)(double alpha, const double* x, double* y, std::size_t n);
// y = x + beta * y
using XpbyF64 = void (*)(const double* x, double beta, double* y, std::size_t n);

struct KernelTable {
    Isa isa;
    GemmF32 gemm_f32;
    GemmF64 gemm_f64;
    DotF64 dot_f64;
    AxpyF64 axpy_f64;
    XpbyF64 xpby_f64;
};

const char* isa_name(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

/// True when the running CPU can execute kernels for `isa`.
bool isa_supported(Isa isa) noexcept;

/// Kernel table for a specific instruction set. Throws InvalidArgument if unsupported.
const KernelTable& table(Isa isa);

/// Kernels used by the library. Chosen on first use: the best supported ISA,
/// unless the RUQ_SIMD environment variable names another ("scalar", "avx2").
const KernelTable& active();

/// Override the active table (tests, CLI). Throws InvalidArgument if unsupported.
void set_active(Isa isa);

namespace detail {
void gemm_f32_scalar(int, int, int, const float*, int, const float*, int, float*, int, bool);
void gemm_f64_scalar(int, int, int, const double*, int, const double*, int, double*, int, bool);
double dot_f64_scalar(const double*, const double*, std::size_t);
void axpy_f64_scalar(double, const double*, double*, std::size_t);
void xpby_f64_scalar(const double*, double, double*, std::size_t);

#if defined(__x86_64__) || defined(__i386__)
void gemm_f32_avx2(int, int, int, const float*, int, const float*, int, float*, int, bool);
void gemm_f64_avx2(int, int, int, const double*, int, const double*, int, double*, int, bool);
double dot_f64_avx2(const double*, const double*, std::size_t);
void axpy_f64_avx2(double, const double*, double*, std::size_t);
void xpby_f64_avx2(const double*, double, double*, std::size_t);
#endif
} // namespace detail

} // namespace ruq::simd
