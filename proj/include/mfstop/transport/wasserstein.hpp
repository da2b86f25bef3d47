#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "mfstop/core/measure.hpp"

namespace mfstop {

inline constexpr std::size_t kExactTransportCapacity = 4096;

enum class ExactMethod { Assignment, ReplicatedAssignment, MinCostFlow };
std::string_view to_string(ExactMethod method);

// Which exact solver wasserstein_exact will use for this pair.
ExactMethod exact_method(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2);

// d(a_i, b_j)^p, row-major, rows parallel over `threads`.
std::vector<double> cost_matrix(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p, int threads = 1);

// Exact W_p under the triple metric. Uniform clouds of equal size are an
// assignment problem; uniform clouds whose sizes have lcm within capacity are
// split into equal-mass units and solved the same way; anything else goes
// through min-cost flow with weights rationalized over 10^6.
double wasserstein_exact(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p, int threads = 1);

// Mean over random directions of the 1-d W_p between projected clouds. A
// direction takes a signed convex combination of the state rows (along a
// random unit vector in R^n), the same for the noise rows, and ±τ, so every
// projection is 1-Lipschitz for the triple metric and the result never
// exceeds wasserstein_exact.
double wasserstein_sliced(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p,
                          std::size_t projections, std::uint64_t seed);

// 1-d W_p between weighted samples by quantile matching.
double wasserstein_1d(std::vector<double> x, std::vector<double> wx, std::vector<double> y, std::vector<double> wy,
                      double p);

}  // namespace mfstop
