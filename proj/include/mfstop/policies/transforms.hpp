#pragma once

#include <cstdint>

#include "mfstop/core/time_grid.hpp"
#include "mfstop/policies/policy.hpp"

namespace mfstop {

// τ^m = t_i where (τ + 1/m) ∧ T ∈ [t_i, t_{i+1}); the last cell is closed, so
// (τ + 1/m) ∧ T = T maps to t_{m−1}. The grid must have exactly m cells.
// Guarantees |τ^m − τ| <= mesh + 1/m.
double discretize_stopping(double tau, const TimeGrid& grid, long long m);

// Φ(delta / sqrt(dt)); maps an N(0, dt) increment to a uniform on [0, 1].
double uniform_from_increment(double delta, double dt);

double standard_normal_cdf(double z);

StoppingPolicy randomize_policy(ProbabilityMap probability, std::uint64_t uniform_stream_seed);

// Continuous-in-paths approximation of a strong rule. With L = 1{τ < ·} and a
// partition 0 = s_0 < ... < s_m = T, each ψ_i is a ramp of the running maximum
// of the rule's feature over grid times before s_i, clamped to [0, 1] with
// slope `sharpness`. The smoothed time is the first t with
// L̂(t) + t/(3T) >= 1/2, where L̂ = ψ_i on (s_i, s_{i+1}], clipped to T; the
// returned rule stops at the first grid time at or after it.
ExogenousRule smooth_stopping(const ExogenousRule& rule, const TimeGrid& partition, int sharpness);

// The smoothed hitting time restricted to [0, query.time]; +inf when it has
// not happened by then. Exposed for tests.
double smoothed_hit_time(const ExogenousRule& rule, const TimeGrid& partition, int sharpness,
                         const ExogenousQuery& query);

}  // namespace mfstop
