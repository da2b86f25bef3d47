#include "mfstop/core/path_bundle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfstop/error.hpp"

namespace mfstop {

PathBundle::PathBundle(std::size_t rows, std::size_t dim, double fill)
    : rows_(rows), dim_(dim), data_(rows * dim, fill) {}

PathBundle::PathBundle(std::size_t rows, std::size_t dim, std::vector<double> coordinate_major)
    : rows_(rows), dim_(dim), data_(std::move(coordinate_major)) {
    if (data_.size() != rows * dim) throw InvalidArgument("path bundle storage does not match rows * dim");
}

PathBundle PathBundle::constant(std::size_t rows, std::span<const double> value) {
    PathBundle p(rows, value.size());
    for (std::size_t c = 0; c < value.size(); ++c) std::ranges::fill(p.coordinate(c), value[c]);
    return p;
}

bool PathBundle::all_finite() const {
    return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
}

PathView::PathView(const PathBundle& path, std::size_t visible, std::size_t cut)
    : path_(&path), visible_(visible), cut_(cut) {
    if (path.rows() == 0 || visible >= path.rows()) throw InvalidArgument("path view past the end of the path");
}

PathView::PathView(const PathBundle& path, std::size_t visible)
    : PathView(path, visible, path.rows() == 0 ? 0 : path.rows() - 1) {}

double PathView::at(std::size_t row, std::size_t coord) const {
    if (row > visible_)
        throw ContractViolation("lookahead: queried row " + std::to_string(row) + " at step " +
                                std::to_string(visible_));
    if (coord >= path_->dim()) throw InvalidArgument("path coordinate out of range");
    return (*path_)(std::min(row, cut_), coord);
}

PathView PathView::narrowed(std::size_t visible) const {
    if (visible > visible_) throw ContractViolation("cannot widen a path view");
    return PathView(*path_, visible, cut_);
}

}  // namespace mfstop
