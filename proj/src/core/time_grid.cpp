#include "mfstop/core/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "mfstop/error.hpp"

namespace mfstop {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw InvalidArgument("time grid needs at least two points");
    if (points_.front() != 0.0) throw InvalidArgument("time grid must start at 0");
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        if (!std::isfinite(points_[i + 1]) || !(points_[i + 1] > points_[i]))
            throw InvalidArgument("time grid points must be finite and strictly increasing");
        mesh_ = std::max(mesh_, points_[i + 1] - points_[i]);
    }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be positive");
    if (steps < 1) throw InvalidArgument("grid needs at least one step");
    std::vector<double> pts(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        pts[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    pts.back() = horizon;
    return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::cell_of(double t) const {
    if (t >= points_.back()) return steps();
    auto it = std::upper_bound(points_.begin(), points_.end(), t);
    if (it == points_.begin()) return 0;
    return static_cast<std::size_t>(it - points_.begin()) - 1;
}

TimeGrid make_grid(double horizon, long long steps) {
    if (steps < 1) throw InvalidArgument("grid needs at least one step");
    return TimeGrid::uniform(horizon, static_cast<std::size_t>(steps));
}

}  // namespace mfstop
