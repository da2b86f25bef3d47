#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/model.hpp"
#include "mfstop/core/path_bundle.hpp"
#include "mfstop/core/time_grid.hpp"
#include "mfstop/policies/policy.hpp"

namespace mfstop {

struct Seeds {
    std::uint64_t common = 1;
    std::uint64_t idio = 2;
    std::uint64_t policy = 3;

    bool operator==(const Seeds&) const = default;
};

// Gaussian increments, or ±sqrt(dt) coin flips to match the tree oracle.
enum class NoiseKind { Gaussian, Rademacher };

struct SimulationOptions {
    int threads = 1;
    std::uint64_t replication = 0;
    NoiseKind noise = NoiseKind::Gaussian;
    // Replaces the common-noise path drawn from seeds.common.
    std::shared_ptr<const PathBundle> common_noise;
    // When set, coefficients and policies see frozen_flow[j] instead of the
    // system's own empirical measure (decoupled / Picard runs).
    const std::vector<EmpiricalMeasure>* frozen_flow = nullptr;
};

struct ParticleRecord {
    std::shared_ptr<const PathBundle> state;
    std::shared_ptr<const PathBundle> idio_noise;
    std::size_t stop_index = 0;
};

struct SystemTrajectory {
    std::shared_ptr<const TimeGrid> grid;
    std::vector<ParticleRecord> particles;
    std::shared_ptr<const PathBundle> common_noise;
    Seeds seeds;
    std::uint64_t replication = 0;

    std::size_t size() const noexcept { return particles.size(); }
    double stop_time(std::size_t i) const { return (*grid)[particles[i].stop_index]; }
};

// The common-noise path B the simulator draws for (seed, replication).
std::shared_ptr<const PathBundle> draw_common_noise(const TimeGrid& grid, std::size_t dim, std::uint64_t seed,
                                                    std::uint64_t replication, NoiseKind kind = NoiseKind::Gaussian);

SystemTrajectory simulate_system(const ModelSpec& model, std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                                 const StoppingPolicy& policy, const InitialLaw& initial, const Seeds& seeds,
                                 const SimulationOptions& options = {});

// μ^N_{t_j} of a trajectory, one measure per grid point.
EmpiricalMeasure empirical_measure_at(const SystemTrajectory& traj, std::size_t j);
std::vector<EmpiricalMeasure> empirical_flow(const SystemTrajectory& traj);

// (1/N) Σ_i [Σ_{j < stop_i} f(t_j, x^i, μ_j) Δt_j + g(τ^i, x^i, μ_T)]. The
// measures come from the trajectory itself unless `flow` is given.
double evaluate_objective(const SystemTrajectory& traj, const ModelSpec& model,
                          const std::vector<EmpiricalMeasure>* flow = nullptr);

struct ValueEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replications = 0;
    std::size_t particles = 0;
};

ValueEstimate summarize(const std::vector<double>& samples, std::size_t particles);

// M independent replications (replication index r = 0..M-1, each with its own
// common noise), parallel over replications.
ValueEstimate estimate_value(const ModelSpec& model, std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                             const StoppingPolicy& policy, const InitialLaw& initial, std::size_t replications,
                             const Seeds& seeds, int threads = 1, NoiseKind noise = NoiseKind::Gaussian);

}  // namespace mfstop
