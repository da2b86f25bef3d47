#include <doctest.h>

#include <cmath>
#include <mutex>
#include <set>

#include "helpers.hpp"
#include "mfstop/error.hpp"
#include "mfstop/models/registry.hpp"
#include "mfstop/sde/simulate.hpp"

using namespace mfstop;

namespace {

double one_g(double, const PathView&, const EmpiricalMeasure&) { return 1.0; }
double one_f(double, const PathView&, const EmpiricalMeasure&) { return 1.0; }
double tau_g(double tau, const PathView&, const EmpiricalMeasure&) { return tau; }

}  // namespace

TEST_CASE("zero coefficients keep every path at X_0") {
    const auto g = th::grid(1.0, 10);
    const auto traj = simulate_system(th::scalar_model(0.0, 0.0, 0.0), 5, g, threshold_policy("time_after", {0.5}),
                                      InitialLaw::point({2.5}), Seeds{});
    for (const auto& p : traj.particles)
        for (std::size_t r = 0; r < g->size(); ++r) CHECK((*p.state)(r, 0) == 2.5);
}

TEST_CASE("constant drift is integrated exactly") {
    const auto g = th::grid(1.0, 8);
    const auto traj =
        simulate_system(th::scalar_model(1.0, 0.0, 0.0), 3, g, StoppingPolicy::never(), InitialLaw::point({0.0}), Seeds{});
    for (const auto& p : traj.particles) {
        CHECK((*p.state)(8, 0) == 1.0);
        CHECK(p.stop_index == 8);
    }
}

TEST_CASE("stopping at index 0 freezes everything at X_0") {
    const auto g = th::grid(1.0, 6);
    const BundledModel m = make_model("ou_meanfield");
    const auto traj = simulate_system(m.spec, 20, g, StoppingPolicy::immediately(), m.initial, Seeds{});
    for (const auto& p : traj.particles) {
        CHECK(p.stop_index == 0);
        for (std::size_t r = 1; r < g->size(); ++r) CHECK((*p.state)(r, 0) == (*p.state)(0, 0));
    }
}

TEST_CASE("empirical flow atoms") {
    const auto g = th::grid(1.0, 4);
    const BundledModel m = make_model("ou_meanfield");
    const auto one = simulate_system(m.spec, 1, g, StoppingPolicy::never(), m.initial, Seeds{});
    for (const auto& mu : empirical_flow(one)) {
        CHECK(mu.size() == 1);
        CHECK(mu.weight(0) == 1.0);
    }
    const auto traj = simulate_system(m.spec, 30, g, threshold_policy("state_above", {0.1}), m.initial, Seeds{});
    const auto flow = empirical_flow(traj);
    for (std::size_t i = 0; i < traj.size(); ++i) CHECK(flow[0].atom(i).stop_time == 0.0);
    for (std::size_t j = 0; j < g->size(); ++j)
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const std::size_t k = traj.particles[i].stop_index;
            CHECK(flow[j].atom(i).stop_time == std::min((*g)[k], (*g)[j]));
        }
}

TEST_CASE("objective examples") {
    const auto g = th::grid(1.0, 4);
    const InitialLaw x0 = InitialLaw::point({0.0});
    const auto a = simulate_system(th::scalar_model(0.3, 1.0, 0.2, th::zero_f, one_g), 7, g,
                                   threshold_policy("state_above", {0.0}), x0, Seeds{});
    CHECK(evaluate_objective(a, th::scalar_model(0.3, 1.0, 0.2, th::zero_f, one_g)) == 1.0);

    const ModelSpec fm = th::scalar_model(0.0, 1.0, 0.0, one_f, [](double, const PathView&, const EmpiricalMeasure&) {
        return 0.0;
    });
    CHECK(evaluate_objective(simulate_system(fm, 5, g, StoppingPolicy::never(), x0, Seeds{}), fm) == 1.0);

    const ModelSpec tm = th::scalar_model(0.0, 1.0, 0.0, th::zero_f, tau_g);
    for (std::size_t k = 0; k <= 4; ++k)
        CHECK(evaluate_objective(simulate_system(tm, 5, g, StoppingPolicy::at_step(k), x0, Seeds{}), tm) == (*g)[k]);
}

TEST_CASE("estimate_value examples") {
    const auto g = th::grid(1.0, 10);
    const ModelSpec det = th::scalar_model(0.5, 0.0, 0.0);
    const auto e = estimate_value(det, 4, g, threshold_policy("time_after", {0.35}), InitialLaw::point({1.0}), 8, Seeds{});
    CHECK(e.std_error == 0.0);
    CHECK(e.replications == 8);
    CHECK(e.particles == 4);

    const ModelSpec c = th::scalar_model(0.0, 1.0, 0.4, th::zero_f, [](double, const PathView&, const EmpiricalMeasure&) {
        return 2.75;
    });
    const auto ce = estimate_value(c, 3, g, StoppingPolicy::never(), InitialLaw::gaussian({0.0}, {1.0}), 5, Seeds{});
    CHECK(ce.mean == 2.75);
    CHECK(ce.std_error == 0.0);

    const ModelSpec bm = th::scalar_model(0.0, 1.0, 0.0);
    const auto be = estimate_value(bm, 50, g, StoppingPolicy::never(), InitialLaw::gaussian({0.7}, {0.5}), 200, Seeds{});
    CHECK(std::abs(be.mean - 0.7) <= 3.0 * be.std_error);
    CHECK_THROWS_AS(estimate_value(bm, 5, g, StoppingPolicy::never(), InitialLaw::point({0.0}), 1, Seeds{}),
                    InvalidArgument);
}

TEST_CASE("stopped paths stay frozen") {
    const auto g = th::grid(1.0, 20);
    for (const auto& id : registry_ids()) {
        const BundledModel m = make_model(id);
        for (std::uint64_t rep = 0; rep < 5; ++rep) {
            SimulationOptions opt;
            opt.replication = rep;
            const auto traj = simulate_system(m.spec, 40, g, threshold_policy("state_above", {0.2}), m.initial, Seeds{},
                                              opt);
            for (const auto& p : traj.particles)
                for (std::size_t r = p.stop_index; r < g->size(); ++r)
                    CHECK((*p.state)(r, 0) == (*p.state)(p.stop_index, 0));
        }
    }
}

TEST_CASE("runs are bit-identical across repeats and thread counts") {
    const auto g = th::grid(1.0, 15);
    const BundledModel m = make_model("ou_meanfield");
    const StoppingPolicy pol = threshold_policy("deviation_above", {0.3});
    SimulationOptions one, four;
    four.threads = 4;
    const auto a = simulate_system(m.spec, 100, g, pol, m.initial, Seeds{}, one);
    const auto b = simulate_system(m.spec, 100, g, pol, m.initial, Seeds{}, four);
    const auto c = simulate_system(m.spec, 100, g, pol, m.initial, Seeds{}, one);
    CHECK(*a.common_noise == *b.common_noise);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(*a.particles[i].state == *b.particles[i].state);
        CHECK(*a.particles[i].state == *c.particles[i].state);
        CHECK(*a.particles[i].idio_noise == *c.particles[i].idio_noise);
        CHECK(a.particles[i].stop_index == b.particles[i].stop_index);
    }
    CHECK(evaluate_objective(a, m.spec) == evaluate_objective(b, m.spec));
}

TEST_CASE("every particle sees the same common increment") {
    // Only the common channel moves the state, so all paths must equal X_0 + B.
    const auto g = th::grid(1.0, 12);
    const ModelSpec m = th::scalar_model(0.0, 0.0, 1.0);
    const auto traj = simulate_system(m, 25, g, StoppingPolicy::never(), InitialLaw::point({0.0}), Seeds{});
    for (const auto& p : traj.particles)
        for (std::size_t r = 0; r < g->size(); ++r) CHECK((*p.state)(r, 0) == (*traj.common_noise)(r, 0));
}

TEST_CASE("moments stay bounded across N") {
    const auto g = th::grid(1.0, 20);
    const BundledModel m = make_model("ou_meanfield");
    for (std::size_t N : {8, 32, 128, 512}) {
        double total = 0.0;
        const std::size_t reps = 4;
        for (std::uint64_t r = 0; r < reps; ++r) {
            SimulationOptions opt;
            opt.replication = r;
            const auto traj = simulate_system(m.spec, N, g, StoppingPolicy::never(), m.initial, Seeds{}, opt);
            double worst = 0.0;
            for (const auto& p : traj.particles)
                for (std::size_t j = 0; j < g->size(); ++j) worst = std::max(worst, std::pow((*p.state)(j, 0), 2));
            total += worst;
        }
        CAPTURE(N);
        CHECK(std::isfinite(total));
        CHECK(total / reps < 50.0);
    }
}

TEST_CASE("blowup and shape errors carry their location") {
    const auto g = th::grid(1.0, 10);
    ModelSpec wild = th::scalar_model(0.0, 0.0, 0.0);
    wild.drift = [](double, const PathView& x, const EmpiricalMeasure&, std::vector<double>& out) {
        out.assign(1, 1e200 * (1.0 + std::abs(x.current())));
    };
    try {
        simulate_system(wild, 3, g, StoppingPolicy::never(), InitialLaw::point({1.0}), Seeds{});
        FAIL("expected a blowup");
    } catch (const NumericalBlowup& e) {
        CHECK(e.step() >= 1);
        CHECK(e.step() <= 10);
    }
    ModelSpec wrong = th::scalar_model(0.0, 1.0, 0.0);
    wrong.drift = [](double, const PathView&, const EmpiricalMeasure&, std::vector<double>& out) { out.assign(3, 0.0); };
    CHECK_THROWS_AS(simulate_system(wrong, 3, g, StoppingPolicy::never(), InitialLaw::point({0.0}), Seeds{}),
                    ContractViolation);
    CHECK_THROWS_AS(simulate_system(th::scalar_model(0, 1, 0), 3, g, StoppingPolicy::never(), InitialLaw::point({0.0, 1.0}),
                                    Seeds{}),
                    InvalidArgument);
    SimulationOptions bad;
    bad.common_noise = std::make_shared<const PathBundle>(5, 1);
    CHECK_THROWS_AS(simulate_system(th::scalar_model(0, 1, 1), 3, g, StoppingPolicy::never(), InitialLaw::point({0.0}),
                                    Seeds{}, bad),
                    IncompatibleOperands);
}

TEST_CASE("policies only see the present and are never asked twice after stopping") {
    const auto g = th::grid(1.0, 10);
    std::mutex mu;
    std::set<std::pair<std::size_t, std::size_t>> asked;
    bool saw_future = false, wrong_view = false;
    ThresholdRule spy{"spy",
                      [&](const PolicyQuery& q, std::span<const double>) {
                          std::lock_guard lock(mu);
                          asked.insert({q.particle, q.step});
                          if (q.state.visible() != q.step || q.idio_noise.visible() != q.step ||
                              q.common_noise.visible() != q.step || q.measure->time_index() != q.step)
                              wrong_view = true;
                          try {
                              (void)q.state.at(q.step + 1);
                              saw_future = true;
                          } catch (const ContractViolation&) {
                          }
                          try {
                              (void)q.common_noise.at(q.step + 1);
                              saw_future = true;
                          } catch (const ContractViolation&) {
                          }
                          return (q.particle % 2 == 0 && q.step == 3) ? 1.0 : -1.0;
                      },
                      {}};
    const BundledModel m = make_model("ou_meanfield");
    const auto traj = simulate_system(m.spec, 12, g, StoppingPolicy(spy), m.initial, Seeds{});
    CHECK_FALSE(saw_future);
    CHECK_FALSE(wrong_view);
    for (const auto& [i, j] : asked)
        if (i % 2 == 0) CHECK(j <= 3);
    for (std::size_t i = 0; i < traj.size(); ++i) CHECK(traj.particles[i].stop_index == (i % 2 == 0 ? 3u : 10u));
}

TEST_CASE("rademacher noise moves by exactly sqrt(dt)") {
    const auto g = th::grid(1.0, 4);
    SimulationOptions opt;
    opt.noise = NoiseKind::Rademacher;
    const auto traj =
        simulate_system(th::scalar_model(0.0, 1.0, 0.0), 10, g, StoppingPolicy::never(), InitialLaw::point({0.0}), Seeds{}, opt);
    for (const auto& p : traj.particles)
        for (std::size_t r = 1; r < g->size(); ++r) CHECK(std::abs((*p.idio_noise)(r, 0) - (*p.idio_noise)(r - 1, 0)) == 0.5);
}
