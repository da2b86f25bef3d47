#include "mfstop/policies/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mfstop/error.hpp"

namespace mfstop {

double discretize_stopping(double tau, const TimeGrid& grid, long long m) {
    if (m < 1) throw InvalidArgument("m must be positive");
    if (grid.steps() != static_cast<std::size_t>(m))
        throw InvalidArgument("discretization grid must have exactly m cells");
    const double horizon = grid.horizon();
    if (!(tau >= 0.0 && tau <= horizon)) throw InvalidArgument("tau outside [0, T]");
    const double shifted = std::min(tau + 1.0 / static_cast<double>(m), horizon);
    if (shifted >= horizon) return grid[grid.steps() - 1];
    return grid[grid.cell_of(shifted)];
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double uniform_from_increment(double delta, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    return standard_normal_cdf(delta / std::sqrt(dt));
}

StoppingPolicy randomize_policy(ProbabilityMap probability, std::uint64_t uniform_stream_seed) {
    if (!probability) throw InvalidArgument("randomized policy needs a probability map");
    return RandomizedRule{std::move(probability), uniform_stream_seed};
}

double smoothed_hit_time(const ExogenousRule& rule, const TimeGrid& partition, int sharpness,
                         const ExogenousQuery& query) {
    const TimeGrid& grid = *query.grid;
    const double horizon = grid.horizon();
    if (std::abs(partition.horizon() - horizon) > 1e-12 * horizon)
        throw IncompatibleOperands("partition and simulation grid have different horizons");
    const double ramp_scale = 3.0 * horizon;
    const double now = query.time;

    // Running max of the feature over simulation grid times strictly before s_i.
    double running_max = -std::numeric_limits<double>::infinity();
    std::size_t next_step = 0;
    for (std::size_t i = 0; i < partition.steps(); ++i) {
        const double s_i = partition[i];
        const double s_next = partition[i + 1];
        if (s_i > now) break;
        while (next_step <= query.step && grid[next_step] < s_i) {
            running_max = std::max(running_max, rule.feature(query.narrowed(next_step)));
            ++next_step;
        }
        const double psi = std::isfinite(running_max)
                               ? std::clamp(1.0 + static_cast<double>(sharpness) * running_max, 0.0, 1.0)
                               : 0.0;
        // On (s_i, s_{i+1}] the level is reached once t >= 3T(1/2 − ψ_i).
        const double reach = ramp_scale * (0.5 - psi);
        double hit = std::numeric_limits<double>::infinity();
        if (reach <= s_i)
            hit = s_i;
        else if (reach <= s_next)
            hit = reach;
        if (hit <= now) return hit;
        if (std::isfinite(hit)) break;
    }
    return now >= horizon ? horizon : std::numeric_limits<double>::infinity();
}

ExogenousRule smooth_stopping(const ExogenousRule& rule, const TimeGrid& partition, int sharpness) {
    if (sharpness < 1) throw InvalidArgument("smoothing index n must be >= 1");
    auto base = std::make_shared<const ExogenousRule>(rule);
    auto part = std::make_shared<const TimeGrid>(partition);
    return ExogenousRule{"smoothed:" + rule.name + "@" + std::to_string(sharpness),
                         [base, part, sharpness](const ExogenousQuery& q) {
                             return smoothed_hit_time(*base, *part, sharpness, q) <= q.time ? 1.0 : -1.0;
                         }};
}

}  // namespace mfstop
