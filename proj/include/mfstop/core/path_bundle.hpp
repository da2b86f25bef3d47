#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfstop {

// Grid-sampled path with `dim` coordinates. Storage is coordinate-major so a
// single coordinate's time series is contiguous for the SIMD kernels.
class PathBundle {
public:
    PathBundle() = default;
    PathBundle(std::size_t rows, std::size_t dim, double fill = 0.0);
    PathBundle(std::size_t rows, std::size_t dim, std::vector<double> coordinate_major);

    static PathBundle constant(std::size_t rows, std::span<const double> value);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }

    double operator()(std::size_t row, std::size_t coord) const { return data_[coord * rows_ + row]; }
    double& operator()(std::size_t row, std::size_t coord) { return data_[coord * rows_ + row]; }

    std::span<const double> coordinate(std::size_t c) const { return {data_.data() + c * rows_, rows_}; }
    std::span<double> coordinate(std::size_t c) { return {data_.data() + c * rows_, rows_}; }

    bool all_finite() const;
    bool operator==(const PathBundle& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

// Read access to a path as seen at grid index `visible`: rows past `visible`
// raise ContractViolation, and values past `cut` repeat row `cut` (the path
// x_{cut ∧ ·}). Coefficients and policies only ever receive PathViews, which is
// how non-anticipativity is enforced.
class PathView {
public:
    PathView() = default;
    PathView(const PathBundle& path, std::size_t visible, std::size_t cut);
    PathView(const PathBundle& path, std::size_t visible);

    std::size_t rows() const noexcept { return path_ ? path_->rows() : 0; }
    std::size_t dim() const noexcept { return path_ ? path_->dim() : 0; }
    std::size_t visible() const noexcept { return visible_; }
    std::size_t cut() const noexcept { return cut_; }

    double at(std::size_t row, std::size_t coord = 0) const;
    // Value at the visible index.
    double current(std::size_t coord = 0) const { return at(visible_, coord); }

    PathView narrowed(std::size_t visible) const;

private:
    const PathBundle* path_ = nullptr;
    std::size_t visible_ = 0;
    std::size_t cut_ = 0;
};

}  // namespace mfstop
