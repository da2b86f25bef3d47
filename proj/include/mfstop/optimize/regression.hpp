#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/model.hpp"
#include "mfstop/core/time_grid.hpp"
#include "mfstop/meanfield/meanfield.hpp"
#include "mfstop/policies/policy.hpp"
#include "mfstop/sde/simulate.hpp"

namespace mfstop {

using BasisFunction = std::function<double(double t, const PathView& state, const EmpiricalMeasure& m)>;

struct BasisFeature {
    std::string name;
    BasisFunction eval;
};

// 1, x, x², and the measure's state mean (first coordinate).
std::vector<BasisFeature> default_basis();

struct RegressionReport {
    std::vector<std::size_t> rank_deficient_steps;
    std::vector<double> stop_fraction;  // per step, among paths still alive
};

struct BackwardOptions {
    int threads = 1;
    NoiseKind noise = NoiseKind::Gaussian;
    std::uint64_t replication = 0;
    std::size_t bins_per_unit = 8;  // resolution of the induced lookup table
    // B path the flow was built on; drawn from seeds.common when null.
    std::shared_ptr<const PathBundle> common_noise;
};

struct BackwardResult {
    ValueEstimate value;
    StoppingPolicy policy = StoppingPolicy::never();
    RegressionReport report;
};

// Regression-based backward induction for the decoupled problem with μ frozen
// to `flow`. Features that are constant across paths at a step are absorbed
// by the intercept; a design that is still rank-deficient falls back to the
// mean continuation value and is recorded in the report. The induced rule is
// a lookup on (step, state bin) holding the majority decision of the
// simulated paths in that bin.
BackwardResult backward_value_frozen_flow(const ModelSpec& model, const std::vector<EmpiricalMeasure>& flow,
                                          const InitialLaw& initial, std::size_t paths,
                                          std::shared_ptr<const TimeGrid> grid, const std::vector<BasisFeature>& basis,
                                          const Seeds& seeds, const BackwardOptions& options = {});

struct MeanFieldRound {
    double value = 0.0;
    double std_error = 0.0;
    double flow_residual = 0.0;
    bool fixed_point_converged = false;
};

struct MeanFieldIteration {
    StoppingPolicy policy = StoppingPolicy::never();
    std::vector<EmpiricalMeasure> flow;
    std::vector<MeanFieldRound> rounds;
};

// Alternates fixed_point_flow under the current rule with
// backward_value_frozen_flow against that flow, at most `rounds` times.
// Nothing guarantees that this settles.
MeanFieldIteration mean_field_iteration(const ModelSpec& model, const InitialLaw& initial, std::size_t particles,
                                        std::size_t paths, std::shared_ptr<const TimeGrid> grid,
                                        std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                        std::size_t rounds = 10, const FixedPointOptions& fp = {});

}  // namespace mfstop
