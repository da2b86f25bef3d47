#include "mfstop/sde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfstop/core/parallel.hpp"
#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/simd/kernels.hpp"

namespace mfstop {

namespace {

double increment(const CounterRng& rng, NoiseKind kind, const DrawIndex& at, double sqrt_dt) {
    return sqrt_dt * (kind == NoiseKind::Gaussian ? rng.normal(at) : rng.sign(at));
}

// Brownian path with B_0 = 0 from per-step increments.
PathBundle brownian_path(const TimeGrid& grid, std::size_t dim, const CounterRng& rng, NoiseKind kind,
                         std::uint64_t replication, std::uint64_t particle) {
    PathBundle path(grid.size(), dim);
    for (std::size_t c = 0; c < dim; ++c) {
        auto col = path.coordinate(c);
        for (std::size_t j = 0; j < grid.steps(); ++j)
            col[j + 1] = col[j] + increment(rng, kind, {replication, particle, j, c}, std::sqrt(grid.dt(j)));
    }
    return path;
}

struct Workspace {
    std::vector<double> drift, sigma, sigma0;
};

void check_shape(const std::vector<double>& out, std::size_t expected, const char* name, const ModelSpec& model,
                 std::size_t step, std::size_t particle) {
    if (out.size() != expected)
        throw ContractViolation("model '" + model.id + "': " + name + " returned " + std::to_string(out.size()) +
                                " entries, expected " + std::to_string(expected));
    for (double v : out)
        if (!std::isfinite(v))
            throw NumericalBlowup(std::string(name) + " is not finite", step, particle);
}

}  // namespace

std::shared_ptr<const PathBundle> draw_common_noise(const TimeGrid& grid, std::size_t dim, std::uint64_t seed,
                                                    std::uint64_t replication, NoiseKind kind) {
    const CounterRng rng(seed, Stream::Common);
    return std::make_shared<const PathBundle>(brownian_path(grid, dim, rng, kind, replication, 0));
}

SystemTrajectory simulate_system(const ModelSpec& model, std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                                 const StoppingPolicy& policy, const InitialLaw& initial, const Seeds& seeds,
                                 const SimulationOptions& options) {
    if (particles == 0) throw InvalidArgument("need at least one particle");
    if (!grid) throw InvalidArgument("simulation needs a grid");
    check_model_dimensions(model);
    if (initial.dim() != model.n) throw InvalidArgument("initial law dimension does not match the model");
    const TimeGrid& g = *grid;
    const std::size_t rows = g.size();
    const std::size_t K = g.steps();
    const std::size_t n = model.n, d = model.d, l = model.l;
    const std::uint64_t rep = options.replication;

    if (options.frozen_flow) {
        if (options.frozen_flow->size() != rows) throw IncompatibleOperands("frozen flow must cover every grid point");
        for (const auto& m : *options.frozen_flow)
            if (!(m.grid() == g)) throw IncompatibleOperands("frozen flow lives on a different grid");
    }

    SystemTrajectory traj;
    traj.grid = grid;
    traj.seeds = seeds;
    traj.replication = rep;
    if (options.common_noise) {
        if (options.common_noise->rows() != rows || options.common_noise->dim() != l)
            throw IncompatibleOperands("common noise path does not match grid and model");
        traj.common_noise = options.common_noise;
    } else {
        traj.common_noise = draw_common_noise(g, l, seeds.common, rep, options.noise);
    }
    const PathBundle& B = *traj.common_noise;

    std::vector<std::shared_ptr<PathBundle>> states(particles);
    std::vector<std::shared_ptr<const PathBundle>> noises(particles);
    std::vector<std::size_t> stop(particles, K + 1);  // K + 1 = still alive

    const CounterRng init_rng(seeds.idio, Stream::Initial);
    const CounterRng idio_rng(seeds.idio, Stream::Idiosyncratic);
    parallel_for(
        particles, options.threads,
        [&](std::size_t begin, std::size_t end) {
            std::vector<double> x0(n);
            for (std::size_t i = begin; i < end; ++i) {
                initial.sample([&](std::size_t k) { return init_rng.uniform({rep, i, 0, k}); },
                               [&](std::size_t k) { return init_rng.normal({rep, i, 1, k}); }, x0);
                for (std::size_t c = 0; c < n; ++c)
                    if (!std::isfinite(x0[c])) throw NumericalBlowup("initial state is not finite", 0, i);
                auto x = std::make_shared<PathBundle>(rows, n);
                for (std::size_t c = 0; c < n; ++c) (*x)(0, c) = x0[c];
                states[i] = std::move(x);
                noises[i] = std::make_shared<const PathBundle>(brownian_path(g, d, idio_rng, options.noise, rep, i));
            }
        },
        64);

    const auto& kern = simd::kernels();
    std::vector<std::size_t> alive;
    std::vector<char> decision(particles, 0);
    // Per alive particle, coordinate-major: x, b, σ·ΔW, σ0·ΔB, result.
    std::vector<double> xs, bs, dws, dbs, out;
    std::vector<double> dB(l);

    for (std::size_t j = 0; j <= K; ++j) {
        alive.clear();
        for (std::size_t i = 0; i < particles; ++i)
            if (stop[i] > K) alive.push_back(i);
        if (alive.empty()) break;
        if (j == K) {
            for (std::size_t i : alive) stop[i] = K;
            break;
        }

        std::optional<EmpiricalMeasure> own;
        if (!options.frozen_flow) {
            std::vector<StoppedTriple> atoms(particles);
            for (std::size_t i = 0; i < particles; ++i) {
                const std::size_t cut = std::min(stop[i], j);
                atoms[i] = StoppedTriple{states[i], cut, noises[i], g[cut]};
            }
            own.emplace(EmpiricalMeasure::uniform(grid, std::move(atoms), j));
        }
        const EmpiricalMeasure& mu = options.frozen_flow ? (*options.frozen_flow)[j] : *own;
        const double t = g[j];
        const double dt = g.dt(j);

        parallel_for(
            alive.size(), options.threads,
            [&](std::size_t begin, std::size_t end) {
                for (std::size_t a = begin; a < end; ++a) {
                    const std::size_t i = alive[a];
                    PolicyQuery q;
                    q.step = j;
                    q.time = t;
                    q.particle = i;
                    q.replication = rep;
                    q.state = PathView(*states[i], j, j);
                    q.idio_noise = PathView(*noises[i], j);
                    q.common_noise = PathView(B, j);
                    q.measure = &mu;
                    q.grid = &g;
                    q.policy_seed = seeds.policy;
                    decision[i] = policy.decide(q) ? 1 : 0;
                }
            },
            64);
        std::size_t kept = 0;
        for (std::size_t i : alive) {
            if (decision[i])
                stop[i] = j;
            else
                alive[kept++] = i;
        }
        alive.resize(kept);
        if (alive.empty()) continue;

        for (std::size_t c = 0; c < l; ++c) dB[c] = B(j + 1, c) - B(j, c);
        const std::size_t m = alive.size();
        xs.assign(n * m, 0.0);
        bs.assign(n * m, 0.0);
        dws.assign(n * m, 0.0);
        dbs.assign(n * m, 0.0);
        out.assign(n * m, 0.0);

        parallel_for(
            m, options.threads,
            [&](std::size_t begin, std::size_t end) {
                Workspace ws;
                std::vector<double> dW(d);
                for (std::size_t a = begin; a < end; ++a) {
                    const std::size_t i = alive[a];
                    const PathView x(*states[i], j, j);
                    model.drift(t, x, mu, ws.drift);
                    check_shape(ws.drift, n, "drift", model, j, i);
                    model.diffusion(t, x, mu, ws.sigma);
                    check_shape(ws.sigma, n * d, "sigma", model, j, i);
                    if (l > 0) {
                        model.common_diffusion(t, x, mu, ws.sigma0);
                        check_shape(ws.sigma0, n * l, "sigma0", model, j, i);
                    }
                    const PathBundle& W = *noises[i];
                    for (std::size_t k = 0; k < d; ++k) dW[k] = W(j + 1, k) - W(j, k);
                    for (std::size_t c = 0; c < n; ++c) {
                        const std::size_t at = c * m + a;
                        xs[at] = (*states[i])(j, c);
                        bs[at] = ws.drift[c];
                        double s = 0.0;
                        for (std::size_t k = 0; k < d; ++k) s += ws.sigma[c * d + k] * dW[k];
                        dws[at] = s;
                        double s0 = 0.0;
                        for (std::size_t k = 0; k < l; ++k) s0 += ws.sigma0[c * l + k] * dB[k];
                        dbs[at] = s0;
                    }
                }
            },
            64);

        kern.euler_update(xs.data(), bs.data(), dws.data(), dbs.data(), dt, out.data(), n * m);
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t a = 0; a < m; ++a) {
                const double v = out[c * m + a];
                if (!std::isfinite(v)) throw NumericalBlowup("state is not finite", j + 1, alive[a]);
                (*states[alive[a]])(j + 1, c) = v;
            }
    }

    traj.particles.resize(particles);
    for (std::size_t i = 0; i < particles; ++i) {
        PathBundle& x = *states[i];
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = stop[i] + 1; r < rows; ++r) x(r, c) = x(stop[i], c);
        traj.particles[i] = ParticleRecord{std::move(states[i]), std::move(noises[i]), stop[i]};
    }
    return traj;
}

EmpiricalMeasure empirical_measure_at(const SystemTrajectory& traj, std::size_t j) {
    const TimeGrid& g = *traj.grid;
    if (j >= g.size()) throw InvalidArgument("grid index out of range");
    std::vector<StoppedTriple> atoms(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& p = traj.particles[i];
        const std::size_t cut = std::min(p.stop_index, j);
        atoms[i] = StoppedTriple{p.state, cut, p.idio_noise, g[cut]};
    }
    return EmpiricalMeasure::uniform(traj.grid, std::move(atoms), j);
}

std::vector<EmpiricalMeasure> empirical_flow(const SystemTrajectory& traj) {
    if (!traj.grid || traj.particles.empty()) throw InvalidArgument("empty trajectory");
    std::vector<EmpiricalMeasure> flow;
    flow.reserve(traj.grid->size());
    for (std::size_t j = 0; j < traj.grid->size(); ++j) flow.push_back(empirical_measure_at(traj, j));
    return flow;
}

double evaluate_objective(const SystemTrajectory& traj, const ModelSpec& model,
                          const std::vector<EmpiricalMeasure>* flow) {
    const TimeGrid& g = *traj.grid;
    const std::size_t K = g.steps();
    if (flow && flow->size() != g.size()) throw IncompatibleOperands("flow must cover every grid point");

    std::size_t last_stop = 0;
    for (const auto& p : traj.particles) last_stop = std::max(last_stop, p.stop_index);
    auto measure = [&](std::size_t j) -> EmpiricalMeasure {
        return flow ? (*flow)[j] : empirical_measure_at(traj, j);
    };

    std::vector<double> running(traj.size(), 0.0);
    for (std::size_t j = 0; j < last_stop; ++j) {
        const EmpiricalMeasure mu = measure(j);
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const auto& p = traj.particles[i];
            if (j >= p.stop_index) continue;
            const double f = model.running_reward(g[j], PathView(*p.state, j, j), mu);
            if (!std::isfinite(f)) throw NumericalBlowup("running reward is not finite", j, i);
            running[i] += f * g.dt(j);
        }
    }
    const EmpiricalMeasure mu_T = measure(K);
    double total = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& p = traj.particles[i];
        const double v = model.terminal_reward(g[p.stop_index], PathView(*p.state, K, p.stop_index), mu_T);
        if (!std::isfinite(v)) throw NumericalBlowup("terminal reward is not finite", p.stop_index, i);
        total += running[i] + v;
    }
    return total / static_cast<double>(traj.size());
}

ValueEstimate summarize(const std::vector<double>& samples, std::size_t particles) {
    ValueEstimate e;
    e.replications = samples.size();
    e.particles = particles;
    if (samples.empty()) return e;
    if (std::ranges::all_of(samples, [&](double v) { return v == samples.front(); })) {
        e.mean = samples.front();
        return e;
    }
    double sum = 0.0;
    for (double v : samples) sum += v;
    e.mean = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - e.mean) * (v - e.mean);
        const double var = ss / static_cast<double>(samples.size() - 1);
        e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    }
    return e;
}

ValueEstimate estimate_value(const ModelSpec& model, std::size_t particles, std::shared_ptr<const TimeGrid> grid,
                             const StoppingPolicy& policy, const InitialLaw& initial, std::size_t replications,
                             const Seeds& seeds, int threads, NoiseKind noise) {
    if (replications < 2) throw InvalidArgument("estimate_value needs M >= 2 replications");
    std::vector<double> values(replications);
    parallel_for(replications, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            SimulationOptions opt;
            opt.replication = r;
            opt.noise = noise;
            const auto traj = simulate_system(model, particles, grid, policy, initial, seeds, opt);
            values[r] = evaluate_objective(traj, model);
        }
    });
    return summarize(values, particles);
}

}  // namespace mfstop
