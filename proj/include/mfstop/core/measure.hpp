#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mfstop/core/path_bundle.hpp"
#include "mfstop/core/time_grid.hpp"

namespace mfstop {

// One atom (x_{t∧·}, w, τ∧t). The state path is shared storage read through a
// freeze index, so building a measure at every step costs O(N) rather than
// copying every prefix.
struct StoppedTriple {
    std::shared_ptr<const PathBundle> state;
    std::size_t state_cut = 0;
    std::shared_ptr<const PathBundle> noise;
    double stop_time = 0.0;

    // Owning constructor for hand-built atoms: the state is taken as-is.
    static StoppedTriple make(PathBundle state, PathBundle noise, double stop_time);

    double state_at(std::size_t row, std::size_t coord = 0) const {
        return (*state)(row < state_cut ? row : state_cut, coord);
    }
    // The state path x_{t∧·} as a view with every row visible.
    PathView state_path() const { return PathView(*state, state->rows() - 1, state_cut); }
};

// Ground metric on C^n × C^d × [0,T]: sup-norm of the state difference plus
// sup-norm of the noise difference plus |τ_a − τ_b|. The per-time norm is the
// Euclidean one; sup is taken over grid points.
double triple_distance(const StoppedTriple& a, const StoppedTriple& b, const TimeGrid& grid);

// Uniform-or-weighted atom cloud over the triple space, tagged with the grid
// index t_j it describes. Weights are renormalized to sum to one on
// construction.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::shared_ptr<const TimeGrid> grid, std::vector<StoppedTriple> atoms,
                     std::vector<double> weights, std::size_t time_index);

    static EmpiricalMeasure uniform(std::shared_ptr<const TimeGrid> grid, std::vector<StoppedTriple> atoms,
                                    std::size_t time_index);

    std::size_t size() const noexcept { return atoms_.size(); }
    const TimeGrid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const TimeGrid>& grid_ptr() const noexcept { return grid_; }
    std::size_t time_index() const noexcept { return time_index_; }
    double time() const { return (*grid_)[time_index_]; }
    bool is_uniform() const noexcept { return uniform_; }

    const std::vector<StoppedTriple>& atoms() const noexcept { return atoms_; }
    const StoppedTriple& atom(std::size_t i) const { return atoms_[i]; }
    std::span<const double> weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_[i]; }

    // Weighted mean of the current (frozen) state x_{t∧τ}; cached.
    std::span<const double> state_mean() const noexcept { return state_mean_; }
    // Mass of atoms already stopped strictly before the measure's time.
    double stopped_mass() const noexcept { return stopped_mass_; }

    // The noise of atom i as visible at the measure's time. Coefficients must
    // use this rather than reading atom(i).noise directly.
    PathView noise_view(std::size_t i) const { return PathView(*atoms_[i].noise, time_index_); }

private:
    std::shared_ptr<const TimeGrid> grid_;
    std::vector<StoppedTriple> atoms_;
    std::vector<double> weights_;
    std::size_t time_index_ = 0;
    bool uniform_ = false;
    std::vector<double> state_mean_;
    double stopped_mass_ = 0.0;
};

}  // namespace mfstop
