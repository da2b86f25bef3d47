#pragma once

#include <memory>
#include <vector>

#include "mfstop/core/path_bundle.hpp"
#include "mfstop/oracle/tree.hpp"

namespace mfstop::tree_detail {

// W path for every full increment code (most significant digit first).
std::vector<std::shared_ptr<const PathBundle>> all_noise_paths(const TreeModel& tree);

// Same operation order as the simulator's Euler kernel.
double euler_step(double x, double drift, double sigma, double sigma0, double dt, double dw, double db);

}  // namespace mfstop::tree_detail
