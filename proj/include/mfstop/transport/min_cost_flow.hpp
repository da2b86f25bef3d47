#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mfstop {

struct FlowEntry {
    std::size_t source = 0;
    std::size_t sink = 0;
    std::int64_t amount = 0;
};

struct TransportPlan {
    std::vector<FlowEntry> flows;
    // Σ amount · cost over the plan, in integer units of mass.
    double cost = 0.0;
};

// Balanced transportation problem on a dense rows×cols row-major cost
// matrix with integer supplies and demands, solved by successive shortest
// paths with Johnson potentials.
TransportPlan solve_transport(std::span<const double> cost, std::size_t rows, std::size_t cols,
                              std::span<const std::int64_t> supply, std::span<const std::int64_t> demand);

// Integer masses summing exactly to `denominator`, by largest remainder.
std::vector<std::int64_t> rationalize_weights(std::span<const double> weights, std::int64_t denominator);

}  // namespace mfstop
