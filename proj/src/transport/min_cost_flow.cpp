#include "mfstop/transport/min_cost_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfstop/error.hpp"

namespace mfstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<std::int64_t> rationalize_weights(std::span<const double> weights, std::int64_t denominator) {
    if (denominator <= 0) throw InvalidArgument("denominator must be positive");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("weights must have positive mass");
    const auto D = static_cast<double>(denominator);
    std::vector<std::int64_t> units(weights.size());
    std::vector<std::pair<double, std::size_t>> remainder(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = weights[i] / total * D;
        units[i] = static_cast<std::int64_t>(std::floor(exact));
        remainder[i] = {exact - static_cast<double>(units[i]), i};
        assigned += units[i];
    }
    // Largest remainders first; ties by index so the result is deterministic.
    std::ranges::sort(remainder, [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t k = 0; assigned < denominator; ++k, ++assigned) ++units[remainder[k % remainder.size()].second];
    for (std::size_t k = 0; assigned > denominator; ++k) {
        const std::size_t i = remainder[remainder.size() - 1 - k % remainder.size()].second;
        if (units[i] > 0) {
            --units[i];
            --assigned;
        }
    }
    return units;
}

TransportPlan solve_transport(std::span<const double> cost, std::size_t rows, std::size_t cols,
                              std::span<const std::int64_t> supply, std::span<const std::int64_t> demand) {
    if (cost.size() != rows * cols) throw InvalidArgument("transport cost matrix must be rows x cols");
    if (supply.size() != rows || demand.size() != cols) throw InvalidArgument("one mass per source and sink");
    for (double c : cost)
        if (!std::isfinite(c) || c < 0.0) throw InvalidArgument("transport costs must be finite and non-negative");
    std::int64_t s_total = 0, d_total = 0;
    for (auto s : supply) {
        if (s < 0) throw InvalidArgument("negative supply");
        s_total += s;
    }
    for (auto d : demand) {
        if (d < 0) throw InvalidArgument("negative demand");
        d_total += d;
    }
    if (s_total != d_total) throw InvalidArgument("transport problem is unbalanced");

    // Nodes: sources 0..rows-1, sinks rows..rows+cols-1. Forward arcs are
    // uncapacitated; backward arcs exist where flow is positive.
    const std::size_t V = rows + cols;
    std::vector<std::int64_t> left(supply.begin(), supply.end());
    std::vector<std::int64_t> need(demand.begin(), demand.end());
    std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> flow_in(cols);  // sink -> (source, amount)
    std::vector<double> pi(V, 0.0), dist(V);
    std::vector<std::ptrdiff_t> parent(V);
    std::vector<char> done(V);

    auto flow_of = [&](std::size_t i, std::size_t j) -> std::int64_t& {
        for (auto& [src, amt] : flow_in[j])
            if (src == i) return amt;
        flow_in[j].emplace_back(i, 0);
        return flow_in[j].back().second;
    };

    std::int64_t remaining = s_total;
    while (remaining > 0) {
        std::ranges::fill(dist, kInf);
        std::ranges::fill(parent, -1);
        std::ranges::fill(done, 0);
        for (std::size_t i = 0; i < rows; ++i)
            if (left[i] > 0) dist[i] = 0.0;

        // Dense Dijkstra on reduced costs; stops at the first sink with demand.
        std::ptrdiff_t target = -1;
        for (;;) {
            std::size_t u = V;
            double best = kInf;
            for (std::size_t k = 0; k < V; ++k)
                if (!done[k] && dist[k] < best) {
                    best = dist[k];
                    u = k;
                }
            if (u == V) break;
            done[u] = 1;
            if (u >= rows) {
                const std::size_t j = u - rows;
                if (need[j] > 0) {
                    target = static_cast<std::ptrdiff_t>(u);
                    break;
                }
                for (const auto& [i, amt] : flow_in[j]) {
                    if (amt <= 0 || done[i]) continue;
                    const double rc = std::max(0.0, -cost[i * cols + j] + pi[u] - pi[i]);
                    if (best + rc < dist[i]) {
                        dist[i] = best + rc;
                        parent[i] = static_cast<std::ptrdiff_t>(u);
                    }
                }
            } else {
                const double* row = cost.data() + u * cols;
                for (std::size_t j = 0; j < cols; ++j) {
                    const std::size_t w = rows + j;
                    if (done[w]) continue;
                    const double rc = std::max(0.0, row[j] + pi[u] - pi[w]);
                    if (best + rc < dist[w]) {
                        dist[w] = best + rc;
                        parent[w] = static_cast<std::ptrdiff_t>(u);
                    }
                }
            }
        }
        if (target < 0) throw ContractViolation("transport problem has no augmenting path");

        // Potentials: settled nodes move by their distance, the rest by the
        // target distance, which keeps reduced costs non-negative.
        const double dt = dist[static_cast<std::size_t>(target)];
        for (std::size_t k = 0; k < V; ++k) pi[k] += done[k] ? dist[k] : dt;

        std::int64_t push = need[static_cast<std::size_t>(target) - rows];
        std::size_t v = static_cast<std::size_t>(target);
        while (parent[v] >= 0) {
            const auto u = static_cast<std::size_t>(parent[v]);
            if (u >= rows) push = std::min(push, flow_of(v, u - rows));  // backward arc sink u -> source v
            v = u;
        }
        push = std::min(push, left[v]);

        v = static_cast<std::size_t>(target);
        while (parent[v] >= 0) {
            const auto u = static_cast<std::size_t>(parent[v]);
            if (u < rows)
                flow_of(u, v - rows) += push;
            else
                flow_of(v, u - rows) -= push;
            v = u;
        }
        left[v] -= push;
        need[static_cast<std::size_t>(target) - rows] -= push;
        remaining -= push;
    }

    TransportPlan plan;
    for (std::size_t j = 0; j < cols; ++j)
        for (const auto& [i, amt] : flow_in[j])
            if (amt > 0) plan.flows.push_back({i, j, amt});
    std::ranges::sort(plan.flows, [](const FlowEntry& a, const FlowEntry& b) {
        return a.source != b.source ? a.source < b.source : a.sink < b.sink;
    });
    for (const auto& f : plan.flows) plan.cost += static_cast<double>(f.amount) * cost[f.source * cols + f.sink];
    return plan;
}

}  // namespace mfstop
