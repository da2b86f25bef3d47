#include <algorithm>
#include <cmath>

#include "mfstop/simd/kernels.hpp"

namespace mfstop::simd {
namespace {

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double max_abs_dev_scalar(const double* a, double c, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::abs(a[k] - c));
    return m;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

double sum_pow_abs_diff_scalar(const double* a, const double* b, std::size_t n, double p) {
    double s = 0.0;
    if (p == 1.0) {
        for (std::size_t k = 0; k < n; ++k) s += std::abs(a[k] - b[k]);
    } else if (p == 2.0) {
        for (std::size_t k = 0; k < n; ++k) {
            const double d = a[k] - b[k];
            s += d * d;
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) s += std::pow(std::abs(a[k] - b[k]), p);
    }
    return s;
}

void euler_update_scalar(const double* x, const double* drift, const double* diffusion, const double* common,
                         double dt, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const double step = drift[k] * dt;
        out[k] = ((x[k] + step) + diffusion[k]) + common[k];
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Isa::Scalar,        max_abs_diff_scalar,     max_abs_dev_scalar, dot_scalar,
                                   sum_pow_abs_diff_scalar, euler_update_scalar};
    return table;
}

}  // namespace mfstop::simd
