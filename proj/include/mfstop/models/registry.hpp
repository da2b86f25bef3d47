#pragma once

#include <map>
#include <string>
#include <vector>

#include "mfstop/core/model.hpp"
#include "mfstop/oracle/tree.hpp"

namespace mfstop {

struct BundledModel {
    ModelSpec spec;
    InitialLaw initial;
    std::map<std::string, double> params;
};

// ou_meanfield:   b = −θx + κ(m̄ − x), σ = s, σ0 = s0, X_0 ~ N(x0, sd²),
//                 f = −ρ·min((x − m̄)², cap), g = clamp(x_τ) − λ·clamp(m̄_T)
// brownian_plain: b = mu, σ = s, no common noise, f = 0, g = clamp(x_τ), X_0 = x0
// tree_mf_small:  b = κ(m̄ − x), σ = 1, σ0 = s0, X_0 = x0, f = 0,
//                 g = 1 + a·tanh(x_τ) − c·∫(1 − |θ − τ|/h)^+ μ_T(dθ)
// Unknown override names are rejected.
std::vector<std::string> registry_ids();
std::map<std::string, double> default_params(const std::string& id);
BundledModel make_model(const std::string& id, const std::map<std::string, double>& overrides = {});

// tree_mf_small on a binary tree of the given depth (horizon = param T).
TreeModel make_tree_model(const std::map<std::string, double>& overrides, std::size_t depth, std::size_t q_levels);

}  // namespace mfstop
