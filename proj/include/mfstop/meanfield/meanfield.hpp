#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/model.hpp"
#include "mfstop/policies/policy.hpp"
#include "mfstop/sde/simulate.hpp"

namespace mfstop {

// Flow of the M_ref-particle system driven by the given common-noise path:
// the surrogate for L((X_{t∧·}, W, τ∧t) | B).
std::vector<EmpiricalMeasure> reference_measure(const ModelSpec& model, const StoppingPolicy& policy,
                                                const InitialLaw& initial, std::size_t particles,
                                                std::shared_ptr<const TimeGrid> grid,
                                                std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                                int threads = 1);

struct FixedPointOptions {
    double tol = 1e-3;
    std::size_t max_iter = 50;
    double p = 2.0;
    int threads = 1;
};

struct FixedPointResult {
    std::vector<EmpiricalMeasure> flow;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

// Picard iteration F_k = Φ(F_{k−1}), where Φ(F) is the flow of M_ref
// particles simulated against the frozen flow F with the same seeds every
// time. The start is Φ applied to the flow that keeps every particle at X_0
// and alive; that first application is not counted. Residual k is
// max_j W_p(F_k(t_j), F_{k−1}(t_j)).
FixedPointResult fixed_point_flow(const ModelSpec& model, const StoppingPolicy& policy, const InitialLaw& initial,
                                  std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                                  std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                  const FixedPointOptions& options = {});

// max_j W_p between two flows on the same grid (exact up to the transport
// capacity, otherwise the same-index coupling, which bounds W_p from above).
double flow_distance(const std::vector<EmpiricalMeasure>& a, const std::vector<EmpiricalMeasure>& b, double p,
                     int threads = 1);

// J at resolution M_ref: estimate_value with N = M_ref over M_rep common-noise
// draws.
ValueEstimate limit_value(const ModelSpec& model, const StoppingPolicy& policy, const InitialLaw& initial,
                          std::size_t reference_particles, std::size_t replications,
                          std::shared_ptr<const TimeGrid> grid, const Seeds& seeds, int threads = 1);

}  // namespace mfstop
