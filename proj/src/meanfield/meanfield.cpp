#include "mfstop/meanfield/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/transport/wasserstein.hpp"

namespace mfstop {

std::vector<EmpiricalMeasure> reference_measure(const ModelSpec& model, const StoppingPolicy& policy,
                                                const InitialLaw& initial, std::size_t particles,
                                                std::shared_ptr<const TimeGrid> grid,
                                                std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                                int threads) {
    if (!common_noise) throw InvalidArgument("reference measure needs a common-noise path");
    SimulationOptions opt;
    opt.threads = threads;
    opt.common_noise = std::move(common_noise);
    return empirical_flow(simulate_system(model, particles, std::move(grid), policy, initial, seeds, opt));
}

double flow_distance(const std::vector<EmpiricalMeasure>& a, const std::vector<EmpiricalMeasure>& b, double p,
                     int threads) {
    if (a.size() != b.size()) throw IncompatibleOperands("flows have different lengths");
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double w;
        if (a[j].size() <= kExactTransportCapacity && b[j].size() <= kExactTransportCapacity) {
            w = wasserstein_exact(a[j], b[j], p, threads);
        } else {
            if (a[j].size() != b[j].size()) throw CapacityExceeded("flows too large for exact transport");
            double s = 0.0;
            for (std::size_t i = 0; i < a[j].size(); ++i)
                s += std::pow(triple_distance(a[j].atom(i), b[j].atom(i), a[j].grid()), p);
            w = std::pow(s / static_cast<double>(a[j].size()), 1.0 / p);
        }
        worst = std::max(worst, w);
    }
    return worst;
}

namespace {

// Every particle sits at X_0 and is still alive at every t_j.
std::vector<EmpiricalMeasure> initial_flow(const ModelSpec& model, const InitialLaw& initial, std::size_t particles,
                                           const std::shared_ptr<const TimeGrid>& grid, const Seeds& seeds) {
    SimulationOptions opt;
    const auto traj = simulate_system(model, particles, grid, StoppingPolicy::immediately(), initial, seeds, opt);
    std::vector<EmpiricalMeasure> flow;
    for (std::size_t j = 0; j < grid->size(); ++j) {
        std::vector<StoppedTriple> atoms(particles);
        for (std::size_t i = 0; i < particles; ++i)
            atoms[i] = StoppedTriple{traj.particles[i].state, 0, traj.particles[i].idio_noise, (*grid)[j]};
        flow.push_back(EmpiricalMeasure::uniform(grid, std::move(atoms), j));
    }
    return flow;
}

}  // namespace

FixedPointResult fixed_point_flow(const ModelSpec& model, const StoppingPolicy& policy, const InitialLaw& initial,
                                  std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                                  std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                  const FixedPointOptions& options) {
    if (!(options.tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
    if (options.max_iter < 1) throw InvalidArgument("fixed-point iteration needs max_iter >= 1");
    if (!common_noise) throw InvalidArgument("fixed-point flow needs a common-noise path");

    SimulationOptions opt;
    opt.threads = options.threads;
    opt.common_noise = common_noise;
    auto step = [&](const std::vector<EmpiricalMeasure>& frozen) {
        opt.frozen_flow = &frozen;
        return empirical_flow(simulate_system(model, particles, grid, policy, initial, seeds, opt));
    };

    FixedPointResult result;
    const auto start = initial_flow(model, initial, particles, grid, seeds);
    std::vector<EmpiricalMeasure> current = step(start);
    for (std::size_t k = 1; k <= options.max_iter; ++k) {
        std::vector<EmpiricalMeasure> next = step(current);
        const double r = flow_distance(next, current, options.p, options.threads);
        result.residual_history.push_back(r);
        result.iterations = k;
        result.residual = r;
        current = std::move(next);
        if (r <= options.tol) {
            result.converged = true;
            break;
        }
    }
    result.flow = std::move(current);
    return result;
}

ValueEstimate limit_value(const ModelSpec& model, const StoppingPolicy& policy, const InitialLaw& initial,
                          std::size_t reference_particles, std::size_t replications,
                          std::shared_ptr<const TimeGrid> grid, const Seeds& seeds, int threads) {
    return estimate_value(model, reference_particles, std::move(grid), policy, initial, replications, seeds, threads);
}

}  // namespace mfstop
