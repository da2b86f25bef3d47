#pragma once

#include <boost/rational.hpp>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/model.hpp"
#include "mfstop/core/time_grid.hpp"

namespace mfstop {

using Rational = boost::rational<long long>;

// Finite 1-d law with exact probabilities.
struct DiscreteLaw {
    std::vector<double> values;
    std::vector<Rational> probabilities;

    static DiscreteLaw point(double value);
    // ±a with probability 1/2 each.
    static DiscreteLaw coin(double a);
    static DiscreteLaw uniform(std::vector<double> values);

    std::size_t size() const noexcept { return values.size(); }
    void validate(const char* what) const;
};

// The N = ∞ system on a finite probability space: X_0, the per-step
// increments of W and B, and optionally a per-step external uniform U with
// q_levels equally likely values. With u_mirrors_future_b, U_j is the index
// of the B increment over [t_j, t_{j+1}] (mod q_levels) instead of being
// independent, which makes any rule reading U anticipative.
struct TreeModel {
    ModelSpec model;
    std::size_t depth = 1;
    double horizon = 1.0;
    DiscreteLaw initial = DiscreteLaw::point(0.0);
    DiscreteLaw dW = DiscreteLaw::coin(1.0);
    DiscreteLaw dB = DiscreteLaw::coin(1.0);
    std::size_t q_levels = 0;
    bool u_mirrors_future_b = false;

    std::size_t u_levels() const noexcept { return q_levels == 0 ? 1 : q_levels; }
    std::shared_ptr<const TimeGrid> grid() const;
    void validate() const;
};

inline constexpr double kMaxScenarios = 1e6;

// ±sqrt(Δt) coins for W and B on a uniform grid with `depth` steps.
TreeModel binary_tree(ModelSpec model, std::size_t depth, double horizon, DiscreteLaw initial,
                      std::size_t q_levels = 0);

struct Scenario {
    std::size_t x0 = 0;
    std::vector<std::size_t> w, b, u;  // increment indices, one per step
    Rational probability;
};

double scenario_count(const TreeModel& tree);
std::vector<Scenario> enumerate_scenarios(const TreeModel& tree);

// What a tree policy sees at step j: X_0..X_j, W and B increments before t_j,
// and U_0..U_j.
struct TreeNode {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t x0 = 0;
    std::span<const double> x;
    std::span<const std::size_t> w, b, u;
};

// Stop (true) / continue (false); nullopt marks a node the policy does not
// cover.
using TreePolicy = std::function<std::optional<bool>(const TreeNode&)>;

TreePolicy tree_never();
TreePolicy tree_stop_at(std::size_t step);

struct TreeSweep {
    std::vector<Scenario> scenarios;
    std::vector<std::size_t> stop;
    std::vector<std::vector<double>> x;
    // conditional_weight[j][s] = P(s | B increments before t_j), from the
    // product structure of the tree.
    std::vector<std::vector<Rational>> conditional_weight;
    long double value = 0.0L;
};

TreeSweep tree_sweep(const TreeModel& tree, const TreePolicy& policy);
long double tree_value(const TreeModel& tree, const TreePolicy& policy);

// Pure rules keyed on (step, X_0 index, W-prefix code, B-prefix code).
using TreeTable = std::map<std::tuple<std::size_t, std::size_t, std::uint64_t, std::uint64_t>, bool>;
TreePolicy table_policy(const TreeModel& tree, std::shared_ptr<const TreeTable> table);
std::uint64_t prefix_code(std::span<const std::size_t> indices, std::size_t base);

struct PureOptimum {
    long double value = 0.0L;
    std::shared_ptr<const TreeTable> table;
    TreePolicy policy;
    std::size_t evaluations = 0;
};

// Exact optimum over rules reading (X_0, W, B) only. Solved by dynamic
// programming over the B-tree: the population at a B-node is the set of
// (X_0, W-prefix) groups still alive plus stopped cohorts, and each node
// tries every joint stop/continue choice of its alive groups.
PureOptimum brute_force_pure_value(const TreeModel& tree);

// Same, over rules that may also read U_0..U_j. By exchangeability of the
// U-histories within a group only the number of stopping histories matters,
// so a group with a alive histories has a + 1 choices.
long double brute_force_randomized_value(const TreeModel& tree);

// Upper bound on the DP's leaf evaluations; CapacityExceeded above 1e8.
double dp_work_estimate(const TreeModel& tree, bool randomized);

struct HViolation {
    std::size_t step = 0;
    std::string event;
    std::string detail;
};

// Checks P(D | B) = P(D | B before t) exactly for every t_j and every atom D
// of σ(X_0, W, B before t_j, τ stopped-by-t_j status).
std::vector<HViolation> check_h_hypothesis(const TreeModel& tree, const TreePolicy& policy);

// Bundled anticipative rule: U mirrors the next B increment and the rule
// stops at t_0 exactly when U_0 = 0, so it reads B over [t_0, t_1].
struct TreeCounterexample {
    TreeModel tree;
    TreePolicy policy;
};
TreeCounterexample anticipative_counterexample(std::size_t depth);

}  // namespace mfstop
