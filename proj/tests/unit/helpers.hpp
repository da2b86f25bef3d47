#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/model.hpp"
#include "mfstop/core/path_bundle.hpp"
#include "mfstop/core/random.hpp"
#include "mfstop/core/time_grid.hpp"

namespace th {

using namespace mfstop;

inline std::shared_ptr<const TimeGrid> grid(double T, std::size_t K) {
    return std::make_shared<const TimeGrid>(make_grid(T, static_cast<long long>(K)));
}

inline VectorCoefficient constant(double v) {
    return [v](double, const PathView&, const EmpiricalMeasure&, std::vector<double>& out) { out.assign(1, v); };
}

inline double zero_f(double, const PathView&, const EmpiricalMeasure&) { return 0.0; }
inline double state_g(double, const PathView& x, const EmpiricalMeasure&) { return x.current(); }

// 1-d model with constant coefficients; l = 0 when s0 is zero.
inline ModelSpec scalar_model(double b, double s, double s0, RunningReward f = zero_f, TerminalReward g = state_g) {
    ModelSpec m;
    m.id = "scalar";
    m.n = m.d = 1;
    m.l = s0 == 0.0 ? 0 : 1;
    m.drift = constant(b);
    m.diffusion = constant(s);
    if (m.l) m.common_diffusion = constant(s0);
    m.running_reward = std::move(f);
    m.terminal_reward = std::move(g);
    m.reward_bound = 1e9;
    return m;
}

// b = −θx, σ = s.
inline ModelSpec ou_model(double theta, double s) {
    ModelSpec m = scalar_model(0.0, s, 0.0);
    m.id = "ou";
    m.drift = [theta](double, const PathView& x, const EmpiricalMeasure&, std::vector<double>& out) {
        out.assign(1, -theta * x.current());
    };
    return m;
}

// Atom with constant state x, constant noise w and stop time tau.
inline StoppedTriple constant_atom(const TimeGrid& g, double x, double w, double tau) {
    const std::vector<double> xv{x}, wv{w};
    return StoppedTriple::make(PathBundle::constant(g.size(), xv), PathBundle::constant(g.size(), wv), tau);
}

// Random atom: random-walk state and noise, stop time on the grid.
inline StoppedTriple random_atom(const TimeGrid& g, const CounterRng& rng, std::uint64_t id, std::size_t n = 1,
                                 std::size_t d = 1) {
    PathBundle x(g.size(), n), w(g.size(), d);
    std::uint64_t k = 0;
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < g.size(); ++r) x(r, c) = (r ? x(r - 1, c) : 0.0) + rng.normal({id, 0, k++, 0});
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 1; r < g.size(); ++r) w(r, c) = w(r - 1, c) + rng.normal({id, 1, k++, 0});
    const auto cut = static_cast<std::size_t>(rng.uniform({id, 2, 0, 0}) * static_cast<double>(g.size()));
    auto t = StoppedTriple::make(std::move(x), std::move(w), g[std::min(cut, g.size() - 1)]);
    t.state_cut = std::min(cut, g.size() - 1);
    return t;
}

inline EmpiricalMeasure random_cloud(std::shared_ptr<const TimeGrid> g, std::size_t size, std::uint64_t seed) {
    const CounterRng rng(seed, Stream::Search);
    std::vector<StoppedTriple> atoms;
    for (std::size_t i = 0; i < size; ++i) atoms.push_back(random_atom(*g, rng, i));
    return EmpiricalMeasure::uniform(g, std::move(atoms), g->steps());
}

}  // namespace th
