#include "mfstop/optimize/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mfstop/error.hpp"

namespace mfstop {

namespace {

constexpr std::int64_t kBinLimit = std::int64_t{1} << 30;

std::int64_t lookup_key(std::size_t step, double x, double bins_per_unit) {
    const double b = std::floor(x * bins_per_unit);
    const auto bin = static_cast<std::int64_t>(std::clamp(b, -static_cast<double>(kBinLimit),
                                                          static_cast<double>(kBinLimit - 1)));
    return static_cast<std::int64_t>(step) * (2 * kBinLimit) + (bin + kBinLimit);
}

bool constant_column(const Eigen::VectorXd& v) {
    const double lo = v.minCoeff(), hi = v.maxCoeff();
    return hi - lo <= 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
}

}  // namespace

std::vector<BasisFeature> default_basis() {
    return {
        {"1", [](double, const PathView&, const EmpiricalMeasure&) { return 1.0; }},
        {"x", [](double, const PathView& x, const EmpiricalMeasure&) { return x.current(); }},
        {"x^2", [](double, const PathView& x, const EmpiricalMeasure&) { return x.current() * x.current(); }},
        {"mean", [](double, const PathView&, const EmpiricalMeasure& m) { return m.state_mean()[0]; }},
    };
}

BackwardResult backward_value_frozen_flow(const ModelSpec& model, const std::vector<EmpiricalMeasure>& flow,
                                          const InitialLaw& initial, std::size_t paths,
                                          std::shared_ptr<const TimeGrid> grid, const std::vector<BasisFeature>& basis,
                                          const Seeds& seeds, const BackwardOptions& options) {
    if (!grid) throw InvalidArgument("backward induction needs a grid");
    if (flow.size() != grid->size()) throw InvalidArgument("frozen flow must cover every grid point");
    if (basis.empty()) throw InvalidArgument("regression basis must be non-empty");
    if (paths < 2) throw InvalidArgument("backward induction needs at least two paths");
    if (options.bins_per_unit < 1) throw InvalidArgument("lookup resolution must be >= 1");

    SimulationOptions opt;
    opt.threads = options.threads;
    opt.noise = options.noise;
    opt.replication = options.replication;
    opt.common_noise = options.common_noise;
    opt.frozen_flow = &flow;
    const SystemTrajectory traj = simulate_system(model, paths, grid, StoppingPolicy::never(), initial, seeds, opt);

    const std::size_t K = grid->steps();
    const EmpiricalMeasure& mu_T = flow[K];
    std::vector<double> value(paths);
    for (std::size_t i = 0; i < paths; ++i)
        value[i] = model.terminal_reward(grid->horizon(), PathView(*traj.particles[i].state, K, K), mu_T);

    BackwardResult result;
    result.report.stop_fraction.assign(grid->size(), 1.0);
    const double bins = static_cast<double>(options.bins_per_unit);
    std::unordered_map<std::int64_t, std::pair<std::size_t, std::size_t>> votes;  // key -> (stop, total)

    std::vector<double> immediate(paths), continuation(paths);
    for (std::size_t j = K; j-- > 0;) {
        const double t = (*grid)[j];
        const double h = grid->dt(j);
        const EmpiricalMeasure& mu = flow[j];
        Eigen::MatrixXd features(static_cast<Eigen::Index>(paths), static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < paths; ++i) {
            const PathBundle& x = *traj.particles[i].state;
            const PathView now(x, j, j);
            immediate[i] = model.terminal_reward(t, PathView(x, K, j), mu_T);
            continuation[i] = model.running_reward(t, now, mu) * h + value[i];
            for (std::size_t k = 0; k < basis.size(); ++k)
                features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = basis[k].eval(t, now, mu);
        }

        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = 0; k < features.cols(); ++k)
            if (!constant_column(features.col(k))) keep.push_back(k);
        Eigen::MatrixXd design(features.rows(), static_cast<Eigen::Index>(keep.size()) + 1);
        design.col(0).setOnes();
        for (std::size_t k = 0; k < keep.size(); ++k) design.col(static_cast<Eigen::Index>(k) + 1) = features.col(keep[k]);
        const Eigen::Map<const Eigen::VectorXd> y(continuation.data(), static_cast<Eigen::Index>(paths));

        Eigen::VectorXd fitted;
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < design.cols()) {
            result.report.rank_deficient_steps.push_back(j);
            fitted = Eigen::VectorXd::Constant(y.size(), y.mean());
        } else {
            fitted = design * qr.solve(y);
        }

        std::size_t stops = 0;
        for (std::size_t i = 0; i < paths; ++i) {
            const bool stop = immediate[i] >= fitted(static_cast<Eigen::Index>(i));
            if (stop) {
                value[i] = immediate[i];
                ++stops;
            } else {
                value[i] = continuation[i];
            }
            auto& v = votes[lookup_key(j, (*traj.particles[i].state)(j, 0), bins)];
            v.first += stop ? 1 : 0;
            ++v.second;
        }
        result.report.stop_fraction[j] = static_cast<double>(stops) / static_cast<double>(paths);
    }
    std::ranges::reverse(result.report.rank_deficient_steps);

    // One sample per path, each a single non-interacting particle.
    result.value = summarize(value, 1);

    auto table = std::make_shared<std::unordered_map<std::int64_t, bool>>();
    for (const auto& [key, v] : votes) (*table)[key] = 2 * v.first > v.second;
    LookupRule rule;
    rule.table = table;
    rule.fallback = false;
    rule.key = [bins](const PolicyQuery& q) { return lookup_key(q.step, q.state.current(), bins); };
    result.policy = StoppingPolicy(std::move(rule));
    return result;
}

MeanFieldIteration mean_field_iteration(const ModelSpec& model, const InitialLaw& initial, std::size_t particles,
                                        std::size_t paths, std::shared_ptr<const TimeGrid> grid,
                                        std::shared_ptr<const PathBundle> common_noise, const Seeds& seeds,
                                        std::size_t rounds, const FixedPointOptions& fp) {
    if (rounds < 1 || rounds > 10) throw InvalidArgument("mean-field iteration runs between 1 and 10 rounds");
    MeanFieldIteration out;
    BackwardOptions bopt;
    bopt.threads = fp.threads;
    bopt.common_noise = common_noise;
    for (std::size_t r = 0; r < rounds; ++r) {
        FixedPointResult f = fixed_point_flow(model, out.policy, initial, particles, grid, common_noise, seeds, fp);
        BackwardResult b = backward_value_frozen_flow(model, f.flow, initial, paths, grid, default_basis(), seeds, bopt);
        out.rounds.push_back({b.value.mean, b.value.std_error, f.residual, f.converged});
        out.policy = std::move(b.policy);
        out.flow = std::move(f.flow);
    }
    return out;
}

}  // namespace mfstop
