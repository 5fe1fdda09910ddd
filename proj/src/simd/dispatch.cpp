#include <atomic>
#include <cstdlib>
#include <string_view>

#include "neva/simd/kernels.hpp"

namespace neva::simd {

#if defined(NEVA_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(NEVA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    const char* env = std::getenv("NEVA_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* wide = avx2_kernels()) return wide;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
#if defined(NEVA_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) noexcept {
    if (name == "scalar") {
        slot().store(&scalar_kernels());
        return true;
    }
    if (name == "avx2") {
        if (const KernelTable* wide = avx2_kernels()) {
            slot().store(wide);
            return true;
        }
    }
    return false;
}

}  // namespace neva::simd
