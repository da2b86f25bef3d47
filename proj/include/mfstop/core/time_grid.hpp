#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfstop {

// Discretization 0 = t_0 < t_1 < ... < t_K = T shared by every path of a run.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> points);

    static TimeGrid uniform(double horizon, std::size_t steps);

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t steps() const noexcept { return points_.size() - 1; }
    double horizon() const noexcept { return points_.back(); }
    double mesh() const noexcept { return mesh_; }
    double operator[](std::size_t i) const { return points_[i]; }
    double dt(std::size_t step) const { return points_[step + 1] - points_[step]; }
    std::span<const double> points() const noexcept { return points_; }

    // Index i with t_i <= t < t_{i+1}; the last point maps to steps().
    std::size_t cell_of(double t) const;

    bool operator==(const TimeGrid& other) const noexcept { return points_ == other.points_; }

private:
    std::vector<double> points_;
    double mesh_ = 0.0;
};

TimeGrid make_grid(double horizon, long long steps);

}  // namespace mfstop
