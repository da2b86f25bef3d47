#include "mfstop/optimize/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfstop/core/parallel.hpp"
#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"

namespace mfstop {

void PolicyFamily::validate() const {
    if (lower.empty() || lower.size() != upper.size()) throw InvalidArgument("policy family needs a non-empty box");
    for (std::size_t k = 0; k < lower.size(); ++k)
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || lower[k] > upper[k])
            throw InvalidArgument("policy family box is empty or unbounded");
    named_feature(feature);
}

StoppingPolicy PolicyFamily::make(std::span<const double> params) const {
    return threshold_policy(feature, std::vector<double>(params.begin(), params.end()));
}

std::size_t lattice_points_per_axis(std::size_t budget, std::size_t dim) {
    if (budget < 1) throw InvalidArgument("search budget must be >= 1");
    if (dim == 0) return 1;
    auto n = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(dim))));
    auto total = [dim](std::size_t k) {
        double t = 1.0;
        for (std::size_t i = 0; i < dim; ++i) t *= static_cast<double>(k);
        return t;
    };
    while (n > 1 && total(n) > static_cast<double>(budget)) --n;
    while (total(n + 1) <= static_cast<double>(budget)) ++n;
    return std::max<std::size_t>(n, 1);
}

std::vector<std::vector<double>> lattice(const PolicyFamily& family, std::size_t points) {
    family.validate();
    if (points < 1) throw InvalidArgument("lattice needs at least one point per axis");
    const std::size_t dim = family.dim();
    auto coord = [&](std::size_t axis, std::size_t i) {
        const double lo = family.lower[axis], hi = family.upper[axis];
        if (points == 1) return 0.5 * (lo + hi);
        if (i + 1 == points) return hi;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    };
    std::size_t total = 1;
    for (std::size_t k = 0; k < dim; ++k) total *= points;
    std::vector<std::vector<double>> out(total, std::vector<double>(dim));
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rest = c;
        for (std::size_t k = dim; k-- > 0;) {
            out[c][k] = coord(k, rest % points);
            rest /= points;
        }
    }
    return out;
}

namespace {

std::vector<Candidate> score(const ModelSpec& model, const InitialLaw& initial, const PolicyFamily& family,
                             std::size_t particles, const std::shared_ptr<const TimeGrid>& grid, const Seeds& seeds,
                             const SearchOptions& options, std::vector<std::vector<double>> params) {
    std::vector<Candidate> out(params.size());
    parallel_for(params.size(), options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            out[c].params = std::move(params[c]);
            out[c].value = estimate_value(model, particles, grid, family.make(out[c].params), initial,
                                          options.replications, seeds, 1, options.noise);
        }
    });
    return out;
}

}  // namespace

SearchResult optimize_policy(const ModelSpec& model, const InitialLaw& initial, const PolicyFamily& family,
                             std::size_t particles, std::shared_ptr<const TimeGrid> grid, const Seeds& seeds,
                             const SearchOptions& options) {
    family.validate();
    if (options.budget < 1) throw InvalidArgument("search budget must be >= 1");
    SearchResult result;
    auto absorb = [&](std::vector<Candidate> batch) {
        for (auto& c : batch) {
            if (result.trace.empty() || c.value.mean > result.value.mean) {
                result.params = c.params;
                result.value = c.value;
            }
            result.trace.push_back(std::move(c));
        }
    };

    if (options.method == SearchMethod::Grid) {
        const std::size_t n = lattice_points_per_axis(options.budget, family.dim());
        absorb(score(model, initial, family, particles, grid, seeds, options, lattice(family, n)));
        return result;
    }

    if (!(options.elite_fraction > 0.0 && options.elite_fraction <= 1.0))
        throw InvalidArgument("elite fraction must be in (0, 1]");
    const std::size_t dim = family.dim();
    const std::size_t generations = std::max<std::size_t>(1, std::min(options.generations, options.budget));
    const std::size_t population = std::max<std::size_t>(1, options.budget / generations);
    const std::size_t elites =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(options.elite_fraction * population)));
    const CounterRng rng(options.search_seed, Stream::Search);
    std::vector<double> mean(dim), sd(dim), width(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        mean[k] = 0.5 * (family.lower[k] + family.upper[k]);
        width[k] = family.upper[k] - family.lower[k];
        sd[k] = 0.5 * width[k];
    }
    for (std::size_t g = 0; g < generations; ++g) {
        std::vector<std::vector<double>> params(population, std::vector<double>(dim));
        for (std::size_t c = 0; c < population; ++c)
            for (std::size_t k = 0; k < dim; ++k)
                params[c][k] = std::clamp(mean[k] + sd[k] * rng.normal({g, c, 0, k}), family.lower[k], family.upper[k]);
        std::vector<Candidate> batch = score(model, initial, family, particles, grid, seeds, options, params);
        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), 0);
        std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
            return batch[a].value.mean > batch[b].value.mean;
        });
        for (std::size_t k = 0; k < dim; ++k) {
            double m = 0.0, v = 0.0;
            for (std::size_t e = 0; e < elites; ++e) m += batch[order[e]].params[k];
            m /= static_cast<double>(elites);
            for (std::size_t e = 0; e < elites; ++e) v += std::pow(batch[order[e]].params[k] - m, 2);
            mean[k] = m;
            sd[k] = std::max(std::sqrt(v / static_cast<double>(elites)), 1e-6 * width[k]);
        }
        absorb(std::move(batch));
    }
    return result;
}

std::string to_string(SearchMethod method) { return method == SearchMethod::Grid ? "grid" : "cross-entropy"; }

SearchMethod parse_search_method(const std::string& name) {
    if (name == "grid") return SearchMethod::Grid;
    if (name == "cross-entropy") return SearchMethod::CrossEntropy;
    throw InvalidArgument("unknown search method '" + name + "'");
}

}  // namespace mfstop
