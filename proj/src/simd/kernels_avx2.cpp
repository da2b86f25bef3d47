#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mfstop/simd/kernels.hpp"

namespace mfstop::simd {
namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline double hmax(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4)
        acc = _mm256_max_pd(acc, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k))));
    double m = hmax(acc);
    for (; k < n; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double max_abs_dev_avx2(const double* a, double c, std::size_t n) {
    const __m256d cv = _mm256_set1_pd(c);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) acc = _mm256_max_pd(acc, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + k), cv)));
    double m = hmax(acc);
    for (; k < n; ++k) m = std::max(m, std::abs(a[k] - c));
    return m;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

double sum_pow_abs_diff_avx2(const double* a, const double* b, std::size_t n, double p) {
    if (p != 1.0 && p != 2.0) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += std::pow(std::abs(a[k] - b[k]), p);
        return s;
    }
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = p == 1.0 ? _mm256_add_pd(acc, abs_pd(d)) : _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        s += p == 1.0 ? std::abs(d) : d * d;
    }
    return s;
}

// Same association order as the scalar reference and no FMA, so results are
// bit-identical and simulations do not depend on the selected variant.
void euler_update_avx2(const double* x, const double* drift, const double* diffusion, const double* common,
                       double dt, double* out, std::size_t n) {
    const __m256d dtv = _mm256_set1_pd(dt);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d step = _mm256_mul_pd(_mm256_loadu_pd(drift + k), dtv);
        __m256d v = _mm256_add_pd(_mm256_loadu_pd(x + k), step);
        v = _mm256_add_pd(v, _mm256_loadu_pd(diffusion + k));
        v = _mm256_add_pd(v, _mm256_loadu_pd(common + k));
        _mm256_storeu_pd(out + k, v);
    }
    for (; k < n; ++k) {
        const double step = drift[k] * dt;
        out[k] = ((x[k] + step) + diffusion[k]) + common[k];
    }
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
    static const KernelTable table{Isa::Avx2,          max_abs_diff_avx2,    max_abs_dev_avx2, dot_avx2,
                                   sum_pow_abs_diff_avx2, euler_update_avx2};
    return &table;
}

}  // namespace mfstop::simd
