#include <atomic>
#include <cstdlib>
#include <string>

#include "ruq/core/error.hpp"
#include "ruq/simd/kernels.hpp"

namespace ruq::simd {

namespace {

constexpr KernelTable scalar_table{Isa::scalar,
                                   detail::gemm_f32_scalar,
                                   detail::gemm_f64_scalar,
                                   detail::dot_f64_scalar,
                                   detail::axpy_f64_scalar,
                                   detail::xpby_f64_scalar};

#if defined(__x86_64__) || defined(__i386__)
constexpr KernelTable avx2_table{Isa::avx2,
                                 detail::gemm_f32_avx2,
                                 detail::gemm_f64_avx2,
                                 detail::dot_f64_avx2,
                                 detail::axpy_f64_avx2,
                                 detail::xpby_f64_avx2};
#endif

const KernelTable* choose_default()
{
    if (const char* env = std::getenv("RUQ_SIMD")) {
        if (auto isa = parse_isa(env); isa && isa_supported(*isa)) return &table(*isa);
    }
    return isa_supported(Isa::avx2) ? &table(Isa::avx2) : &scalar_table;
}

std::atomic<const KernelTable*>& active_slot()
{
    static std::atomic<const KernelTable*> slot{choose_default()};
    return slot;
}

} // namespace

const char* isa_name(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept
{
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    return std::nullopt;
}

bool isa_supported(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa)
{
    if (!isa_supported(isa)) throw InvalidArgument(std::string("SIMD level not supported here: ") + isa_name(isa));
#if defined(__x86_64__) || defined(__i386__)
    if (isa == Isa::avx2) return avx2_table;
#endif
    return scalar_table;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

} // namespace ruq::simd
