#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/path_bundle.hpp"
#include "mfstop/core/time_grid.hpp"

namespace mfstop {

// Everything a stopping rule may look at when deciding for one particle at
// grid index `step`. Paths are PathViews truncated at `step`; `measure` is
// μ_{t_step}.
struct PolicyQuery {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t particle = 0;
    std::uint64_t replication = 0;
    PathView state;
    PathView idio_noise;
    PathView common_noise;
    const EmpiricalMeasure* measure = nullptr;
    const TimeGrid* grid = nullptr;
    std::uint64_t policy_seed = 0;
};

// Restricted query for strong rules: τ = φ(X_0, W, B) only.
struct ExogenousQuery {
    std::size_t step = 0;
    double time = 0.0;
    PathView initial_state;  // visible up to row 0 only
    PathView idio_noise;
    PathView common_noise;
    const TimeGrid* grid = nullptr;

    ExogenousQuery narrowed(std::size_t earlier_step) const;
};

using FeatureMap = std::function<double(const PolicyQuery&, std::span<const double> params)>;
using ProbabilityMap = std::function<double(const PolicyQuery&)>;
using HistoryKey = std::function<std::int64_t(const PolicyQuery&)>;
using ExogenousFeature = std::function<double(const ExogenousQuery&)>;

// Stop as soon as feature(query, params) >= 0.
struct ThresholdRule {
    std::string name;
    FeatureMap feature;
    std::vector<double> params;
};

// Decision table keyed by a discretized history; keys missing from the table
// take `fallback`.
struct LookupRule {
    HistoryKey key;
    std::shared_ptr<const std::unordered_map<std::int64_t, bool>> table;
    bool fallback = false;
};

// Stops iff q(query) >= U with U uniform, drawn per (replication, particle,
// step) from the policy stream keyed on `seed` and the run's policy seed.
struct RandomizedRule {
    ProbabilityMap probability;
    std::uint64_t seed = 0;
};

// First time feature(X_0, W, B) >= 0.
struct ExogenousRule {
    std::string name;
    ExogenousFeature feature;
};

class StoppingPolicy {
public:
    using Variant = std::variant<ThresholdRule, LookupRule, RandomizedRule, ExogenousRule>;

    StoppingPolicy(ThresholdRule rule) : rule_(std::move(rule)) {}
    StoppingPolicy(LookupRule rule) : rule_(std::move(rule)) {}
    StoppingPolicy(RandomizedRule rule) : rule_(std::move(rule)) {}
    StoppingPolicy(ExogenousRule rule) : rule_(std::move(rule)) {}

    static StoppingPolicy never();
    static StoppingPolicy immediately();
    static StoppingPolicy at_step(std::size_t step);

    bool decide(const PolicyQuery& query) const;
    const Variant& rule() const noexcept { return rule_; }
    // True for Threshold/Exogenous/Lookup rules, which use no extra randomness.
    bool is_strong() const noexcept { return !std::holds_alternative<RandomizedRule>(rule_); }
    std::string describe() const;

private:
    Variant rule_;
};

ExogenousQuery exogenous_view(const PolicyQuery& query);

// Named threshold features used by configs and the optimizer:
//   state_above:      x_t − θ0         (stop when the state reaches θ0)
//   state_below:      θ0 − x_t
//   time_after:       t − θ0
//   deviation_above:  x_t − mean_t − θ0
//   state_or_time:    max(x_t − θ0, t − θ1)
FeatureMap named_feature(const std::string& name);
StoppingPolicy threshold_policy(const std::string& feature, std::vector<double> params);

}  // namespace mfstop
