#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfstop/core/model.hpp"
#include "mfstop/core/time_grid.hpp"
#include "mfstop/policies/policy.hpp"
#include "mfstop/sde/simulate.hpp"

namespace mfstop {

// A parametric family of threshold rules over a bounded box.
struct PolicyFamily {
    std::string feature;  // a named_feature
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const noexcept { return lower.size(); }
    StoppingPolicy make(std::span<const double> params) const;
    void validate() const;
};

enum class SearchMethod { Grid, CrossEntropy };

struct SearchOptions {
    SearchMethod method = SearchMethod::Grid;
    std::size_t budget = 9;       // candidate evaluations
    std::size_t replications = 16;
    std::size_t generations = 10;  // cross-entropy only
    double elite_fraction = 0.2;
    std::uint64_t search_seed = 7;
    int threads = 1;
    NoiseKind noise = NoiseKind::Gaussian;
};

struct Candidate {
    std::vector<double> params;
    ValueEstimate value;
};

struct SearchResult {
    std::vector<double> params;
    ValueEstimate value;
    std::vector<Candidate> trace;  // in evaluation order
};

// Lattice with `points` per axis (the centre when points == 1), first axis
// slowest.
std::vector<std::vector<double>> lattice(const PolicyFamily& family, std::size_t points);
std::size_t lattice_points_per_axis(std::size_t budget, std::size_t dim);

// Every candidate is scored with the same seeds, so comparisons are
// deterministic; ties keep the earlier candidate.
SearchResult optimize_policy(const ModelSpec& model, const InitialLaw& initial, const PolicyFamily& family,
                             std::size_t particles, std::shared_ptr<const TimeGrid> grid, const Seeds& seeds,
                             const SearchOptions& options = {});

std::string to_string(SearchMethod method);
SearchMethod parse_search_method(const std::string& name);

}  // namespace mfstop
