#include <atomic>
#include <cstdlib>
#include <cstring>

#include "mfstop/simd/kernels.hpp"

namespace mfstop::simd {

#ifdef MFSTOP_HAVE_AVX2_TU
const KernelTable* avx2_kernels_impl();
#endif

bool cpu_has_avx2() {
#if defined(MFSTOP_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* avx2_kernels() {
#ifdef MFSTOP_HAVE_AVX2_TU
    if (cpu_has_avx2()) return avx2_kernels_impl();
#endif
    return nullptr;
}

namespace {

const KernelTable* initial_table() {
    // MFSTOP_ISA=scalar forces the reference kernels.
    if (const char* env = std::getenv("MFSTOP_ISA"); env && std::strcmp(env, "scalar") == 0)
        return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

bool select_isa(Isa isa) {
    if (isa == Isa::Avx2) {
        if (const KernelTable* t = avx2_kernels()) {
            active().store(t);
            return true;
        }
        active().store(&scalar_kernels());
        return false;
    }
    active().store(&scalar_kernels());
    return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace mfstop::simd
