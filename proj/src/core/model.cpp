#include "mfstop/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"

namespace mfstop {

InitialLaw InitialLaw::point(std::vector<double> value) {
    InitialLaw law;
    law.kind_ = Kind::Point;
    law.dim_ = value.size();
    law.a_ = std::move(value);
    return law;
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, std::vector<double> stddev) {
    if (mean.size() != stddev.size()) throw InvalidArgument("gaussian law: mean and stddev sizes differ");
    for (double s : stddev)
        if (!(s >= 0.0)) throw InvalidArgument("gaussian law: stddev must be non-negative");
    InitialLaw law;
    law.kind_ = Kind::Gaussian;
    law.dim_ = mean.size();
    law.a_ = std::move(mean);
    law.b_ = std::move(stddev);
    return law;
}

InitialLaw InitialLaw::discrete(std::vector<std::vector<double>> points, std::vector<double> probabilities) {
    if (points.empty() || points.size() != probabilities.size())
        throw InvalidArgument("discrete law needs one probability per point");
    InitialLaw law;
    law.kind_ = Kind::Discrete;
    law.dim_ = points.front().size();
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != law.dim_) throw InvalidArgument("discrete law points differ in dimension");
        if (!(probabilities[i] >= 0.0)) throw InvalidArgument("discrete law probabilities must be non-negative");
        total += probabilities[i];
        law.cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("discrete law probabilities must sum to 1");
    law.points_ = std::move(points);
    return law;
}

void InitialLaw::sample(const std::function<double(std::size_t)>& uniform01,
                        const std::function<double(std::size_t)>& normal01, std::span<double> out) const {
    switch (kind_) {
        case Kind::Point:
            std::ranges::copy(a_, out.begin());
            return;
        case Kind::Gaussian:
            for (std::size_t k = 0; k < dim_; ++k) out[k] = a_[k] + b_[k] * normal01(k);
            return;
        case Kind::Discrete: {
            const double u = uniform01(0) * cumulative_.back();
            auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            const std::size_t i =
                std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), points_.size() - 1);
            std::ranges::copy(points_[i], out.begin());
            return;
        }
    }
}

std::vector<double> InitialLaw::mean() const {
    switch (kind_) {
        case Kind::Point:
        case Kind::Gaussian: return a_;
        case Kind::Discrete: {
            std::vector<double> m(dim_, 0.0);
            double prev = 0.0;
            for (std::size_t i = 0; i < points_.size(); ++i) {
                const double p = cumulative_[i] - prev;
                prev = cumulative_[i];
                for (std::size_t k = 0; k < dim_; ++k) m[k] += p * points_[i][k];
            }
            return m;
        }
    }
    return {};
}

void check_model_dimensions(const ModelSpec& model) {
    if (model.n == 0) throw InvalidArgument("model state dimension must be positive");
    if (model.d == 0) throw InvalidArgument("model idiosyncratic noise dimension must be positive");
    if (!model.drift || !model.diffusion || !model.running_reward || !model.terminal_reward)
        throw InvalidArgument("model '" + model.id + "' is missing a coefficient");
    if (model.l > 0 && !model.common_diffusion)
        throw InvalidArgument("model '" + model.id + "' declares common noise without sigma0");
    if (!(model.moment_p >= 2.0)) throw InvalidArgument("moment order p must be >= 2");
}

ShapeCheckReport check_model_shapes(const ModelSpec& model, const TimeGrid& grid, std::size_t samples,
                                    std::uint64_t seed) {
    check_model_dimensions(model);
    const CounterRng rng(seed, Stream::Search);
    auto grid_ptr = std::make_shared<const TimeGrid>(grid);
    const std::size_t rows = grid.size();
    ShapeCheckReport report;
    std::vector<double> out;
    for (std::size_t s = 0; s < samples; ++s) {
        auto normal = [&](std::uint64_t k) { return rng.normal({s, 0, 0, k}); };
        const std::size_t atoms = 1 + static_cast<std::size_t>(rng.uniform({s, 1, 0, 0}) * 4.0);
        const std::size_t j = std::min(rows - 1, static_cast<std::size_t>(rng.uniform({s, 2, 0, 0}) * rows));
        std::vector<StoppedTriple> cloud;
        std::uint64_t k = 0;
        for (std::size_t a = 0; a < atoms; ++a) {
            PathBundle x(rows, model.n), w(rows, model.d);
            for (std::size_t c = 0; c < model.n; ++c)
                for (std::size_t r = 1; r < rows; ++r) x(r, c) = x(r - 1, c) + 0.3 * normal(k++);
            for (std::size_t c = 0; c < model.d; ++c)
                for (std::size_t r = 1; r < rows; ++r) w(r, c) = w(r - 1, c) + 0.3 * normal(k++);
            auto t = StoppedTriple::make(std::move(x), std::move(w), grid[j]);
            t.state_cut = j;
            cloud.push_back(std::move(t));
        }
        const EmpiricalMeasure m = EmpiricalMeasure::uniform(grid_ptr, cloud, j);
        const PathView x = PathView(*cloud.front().state, j);
        const double t = grid[j];

        auto check = [&](const VectorCoefficient& fn, std::size_t expected, const char* name) {
            out.clear();
            fn(t, x, m, out);
            if (out.size() != expected)
                throw ContractViolation(std::string("model '") + model.id + "': " + name + " has " +
                                        std::to_string(out.size()) + " entries, expected " +
                                        std::to_string(expected));
            for (double v : out)
                if (!std::isfinite(v))
                    throw ContractViolation(std::string("model '") + model.id + "': " + name + " is not finite");
        };
        check(model.drift, model.n, "drift");
        check(model.diffusion, model.n * model.d, "sigma");
        if (model.l > 0) check(model.common_diffusion, model.n * model.l, "sigma0");

        const double f = model.running_reward(t, x, m);
        const double g = model.terminal_reward(t, PathView(*cloud.front().state, rows - 1, j), m);
        for (double v : {f, g}) {
            if (!std::isfinite(v) || std::abs(v) > model.reward_bound)
                throw ContractViolation("model '" + model.id + "': reward " + std::to_string(v) +
                                        " exceeds declared bound " + std::to_string(model.reward_bound));
            report.max_abs_reward = std::max(report.max_abs_reward, std::abs(v));
        }
        ++report.samples;
    }
    return report;
}

}  // namespace mfstop
