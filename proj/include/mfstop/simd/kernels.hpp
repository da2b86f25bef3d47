#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels_scalar.cpp; an AVX2 variant is picked at startup when the CPU
// supports it. max_abs_diff, max_abs_dev and euler_update are bit-identical
// across variants (no reassociation, no FMA contraction); dot and
// sum_pow_abs_diff reassociate and agree to rounding only.

namespace mfstop::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    // max_k |a_k − b_k|
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
    // max_k |a_k − c|
    double (*max_abs_dev)(const double* a, double c, std::size_t n);
    // Σ a_k b_k
    double (*dot)(const double* a, const double* b, std::size_t n);
    // Σ |a_k − b_k|^p, with p = 1 and p = 2 special-cased
    double (*sum_pow_abs_diff)(const double* a, const double* b, std::size_t n, double p);
    // out_k = x_k + drift_k·dt + diffusion_k + common_k
    void (*euler_update)(const double* x, const double* drift, const double* diffusion, const double* common,
                         double dt, double* out, std::size_t n);
};

const KernelTable& kernels();
const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();
// Overrides the runtime choice (tests and benchmarks). Requesting Avx2 on a
// machine without it falls back to scalar and returns false.
bool select_isa(Isa isa);
std::string_view isa_name(Isa isa);

}  // namespace mfstop::simd
