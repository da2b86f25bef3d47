#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfstop {

struct Assignment {
    std::vector<std::size_t> row_to_col;
    double cost = 0.0;
};

// Minimum-cost perfect matching on a dense n×n row-major cost matrix
// (Jonker–Volgenant shortest augmenting paths). Costs must be finite.
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace mfstop
