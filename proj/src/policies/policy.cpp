#include "mfstop/policies/policy.hpp"

#include <algorithm>
#include <sstream>

#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"

namespace mfstop {

ExogenousQuery ExogenousQuery::narrowed(std::size_t earlier_step) const {
    ExogenousQuery q = *this;
    q.step = earlier_step;
    q.time = (*grid)[earlier_step];
    q.idio_noise = idio_noise.narrowed(earlier_step);
    q.common_noise = common_noise.narrowed(earlier_step);
    return q;
}

ExogenousQuery exogenous_view(const PolicyQuery& query) {
    ExogenousQuery q;
    q.step = query.step;
    q.time = query.time;
    q.initial_state = query.state.narrowed(0);
    q.idio_noise = query.idio_noise;
    q.common_noise = query.common_noise;
    q.grid = query.grid;
    return q;
}

StoppingPolicy StoppingPolicy::never() {
    return ExogenousRule{"never", [](const ExogenousQuery&) { return -1.0; }};
}

StoppingPolicy StoppingPolicy::immediately() {
    return ExogenousRule{"immediately", [](const ExogenousQuery&) { return 1.0; }};
}

StoppingPolicy StoppingPolicy::at_step(std::size_t step) {
    return ExogenousRule{"at_step_" + std::to_string(step),
                         [step](const ExogenousQuery& q) { return q.step >= step ? 1.0 : -1.0; }};
}

bool StoppingPolicy::decide(const PolicyQuery& query) const {
    return std::visit(
        [&](const auto& rule) -> bool {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ThresholdRule>) {
                return rule.feature(query, rule.params) >= 0.0;
            } else if constexpr (std::is_same_v<R, LookupRule>) {
                const auto it = rule.table->find(rule.key(query));
                return it == rule.table->end() ? rule.fallback : it->second;
            } else if constexpr (std::is_same_v<R, RandomizedRule>) {
                const double q = rule.probability(query);
                if (!(q >= 0.0 && q <= 1.0))
                    throw ContractViolation("randomized policy probability " + std::to_string(q) +
                                            " outside [0, 1]");
                const CounterRng rng(rule.seed ^ splitmix64(query.policy_seed), Stream::Policy);
                return q >= rng.uniform({query.replication, query.particle, query.step, 0});
            } else {
                return rule.feature(exogenous_view(query)) >= 0.0;
            }
        },
        rule_);
}

std::string StoppingPolicy::describe() const {
    return std::visit(
        [](const auto& rule) -> std::string {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ThresholdRule>) {
                std::ostringstream os;
                os << "threshold:" << rule.name << "(";
                for (std::size_t i = 0; i < rule.params.size(); ++i) os << (i ? "," : "") << rule.params[i];
                os << ")";
                return os.str();
            } else if constexpr (std::is_same_v<R, LookupRule>) {
                return "lookup[" + std::to_string(rule.table->size()) + "]";
            } else if constexpr (std::is_same_v<R, RandomizedRule>) {
                return "randomized";
            } else {
                return "exogenous:" + rule.name;
            }
        },
        rule_);
}

FeatureMap named_feature(const std::string& name) {
    if (name == "state_above")
        return [](const PolicyQuery& q, std::span<const double> p) { return q.state.current() - p[0]; };
    if (name == "state_below")
        return [](const PolicyQuery& q, std::span<const double> p) { return p[0] - q.state.current(); };
    if (name == "time_after") return [](const PolicyQuery& q, std::span<const double> p) { return q.time - p[0]; };
    if (name == "deviation_above")
        return [](const PolicyQuery& q, std::span<const double> p) {
            return q.state.current() - q.measure->state_mean()[0] - p[0];
        };
    if (name == "state_or_time")
        return [](const PolicyQuery& q, std::span<const double> p) {
            return std::max(q.state.current() - p[0], q.time - p[1]);
        };
    throw InvalidArgument("unknown threshold feature '" + name + "'");
}

StoppingPolicy threshold_policy(const std::string& feature, std::vector<double> params) {
    const std::size_t needed = feature == "state_or_time" ? 2 : 1;
    if (params.size() != needed)
        throw InvalidArgument("feature '" + feature + "' takes " + std::to_string(needed) + " parameter(s)");
    return ThresholdRule{feature, named_feature(feature), std::move(params)};
}

}  // namespace mfstop
