#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfstop/error.hpp"
#include "mfstop/meanfield/meanfield.hpp"
#include "mfstop/models/registry.hpp"
#include "mfstop/transport/wasserstein.hpp"

using namespace mfstop;

namespace {

// b = c · mean, σ = s, σ0 = s0 with ℓ = 1 even when s0 = 0.
ModelSpec mean_driven(double c, double s, double s0) {
    ModelSpec m = th::scalar_model(0.0, s, 1.0);
    m.drift = [c](double, const PathView&, const EmpiricalMeasure& mu, std::vector<double>& out) {
        out.assign(1, c * mu.state_mean()[0]);
    };
    m.common_diffusion = th::constant(s0);
    return m;
}

}  // namespace

TEST_CASE("reference flow ignores B when there is no common channel") {
    const auto g = th::grid(1.0, 8);
    const ModelSpec m = mean_driven(0.5, 0.4, 0.0);
    const InitialLaw x0 = InitialLaw::gaussian({0.0}, {1.0});
    const auto b1 = draw_common_noise(*g, 1, 1, 0), b2 = draw_common_noise(*g, 1, 77, 5);
    const auto f1 = reference_measure(m, threshold_policy("state_above", {0.3}), x0, 40, g, b1, Seeds{});
    const auto f2 = reference_measure(m, threshold_policy("state_above", {0.3}), x0, 40, g, b2, Seeds{});
    CHECK(flow_distance(f1, f2, 2.0) == 0.0);
    for (std::size_t j = 0; j < g->size(); ++j)
        for (std::size_t i = 0; i < f1[j].size(); ++i) CHECK(f1[j].atom(i).state_at(j) == f2[j].atom(i).state_at(j));
}

TEST_CASE("reference flow of one particle") {
    const auto g = th::grid(1.0, 4);
    const BundledModel m = make_model("ou_meanfield");
    const auto flow = reference_measure(m.spec, StoppingPolicy::never(), m.initial, 1, g, draw_common_noise(*g, 1, 1, 0),
                                        Seeds{});
    for (const auto& mu : flow) CHECK(mu.size() == 1);
}

TEST_CASE("linear mean-driven flow follows the Euler recursion") {
    const auto g = th::grid(1.0, 10);
    const double c = 0.7, x0 = 1.3;
    const auto flow = reference_measure(mean_driven(c, 0.0, 0.0), StoppingPolicy::never(), InitialLaw::point({x0}), 16,
                                        g, draw_common_noise(*g, 1, 1, 0), Seeds{});
    for (std::size_t j = 0; j < g->size(); ++j)
        CHECK(flow[j].state_mean()[0] == doctest::Approx(x0 * std::pow(1.0 + c * g->dt(0), j)).epsilon(1e-12));
}

TEST_CASE("fixed point of a measure-independent model is immediate") {
    const auto g = th::grid(1.0, 6);
    const auto r = fixed_point_flow(th::ou_model(1.0, 0.5), threshold_policy("state_above", {0.2}),
                                    InitialLaw::gaussian({0.0}, {1.0}), 32, g, draw_common_noise(*g, 0, 1, 0), Seeds{});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.residual == 0.0);
}

TEST_CASE("infinite tolerance returns the first iterate") {
    const auto g = th::grid(1.0, 6);
    FixedPointOptions opt;
    opt.tol = INFINITY;
    const auto r = fixed_point_flow(mean_driven(0.5, 0.3, 0.2), StoppingPolicy::never(), InitialLaw::gaussian({1.0}, {0.5}),
                                    32, g, draw_common_noise(*g, 1, 1, 0), Seeds{}, opt);
    CHECK(r.iterations == 1);
    CHECK(r.converged);
}

TEST_CASE("Picard residuals shrink and the fixed point is self-consistent") {
    const auto g = th::grid(1.0, 10);
    const ModelSpec m = mean_driven(0.5, 0.3, 0.2);
    const InitialLaw x0 = InitialLaw::gaussian({1.0}, {0.5});
    const auto b = draw_common_noise(*g, 1, 3, 0);
    FixedPointOptions opt;
    opt.tol = 1e-10;
    const auto r = fixed_point_flow(m, StoppingPolicy::never(), x0, 48, g, b, Seeds{}, opt);
    REQUIRE(r.residual_history.size() >= 3);
    for (std::size_t k = 1; k < r.residual_history.size(); ++k)
        if (r.residual_history[k - 1] > 1e-13) CHECK(r.residual_history[k] < 0.6 * r.residual_history[k - 1]);
    CHECK(r.converged);

    SimulationOptions sopt;
    sopt.common_noise = b;
    sopt.frozen_flow = &r.flow;
    const auto again = empirical_flow(simulate_system(m, 48, g, StoppingPolicy::never(), x0, Seeds{}, sopt));
    CHECK(flow_distance(again, r.flow, 2.0) <= 2.0 * opt.tol);
}

TEST_CASE("flow distance is the worst exact distance over time") {
    const auto g = th::grid(1.0, 3);
    const BundledModel m = make_model("ou_meanfield");
    const auto a = reference_measure(m.spec, StoppingPolicy::never(), m.initial, 10, g, draw_common_noise(*g, 1, 1, 0),
                                     Seeds{1, 2, 3});
    const auto b = reference_measure(m.spec, StoppingPolicy::never(), m.initial, 10, g, draw_common_noise(*g, 1, 1, 0),
                                     Seeds{1, 9, 3});
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, wasserstein_exact(a[j], b[j], 2.0));
    CHECK(flow_distance(a, b, 2.0) == worst);
}

TEST_CASE("limit value examples") {
    const auto g = th::grid(1.0, 8);
    const ModelSpec c = th::scalar_model(0.0, 1.0, 0.3, th::zero_f, [](double, const PathView&, const EmpiricalMeasure&) {
        return -1.25;
    });
    const auto v = limit_value(c, StoppingPolicy::never(), InitialLaw::point({0.0}), 64, 4, g, Seeds{});
    CHECK(v.mean == -1.25);
    CHECK(v.std_error == 0.0);
    const auto d = limit_value(mean_driven(0.3, 0.0, 0.0), threshold_policy("state_above", {1.2}),
                               InitialLaw::point({1.0}), 64, 4, g, Seeds{});
    CHECK(d.std_error == 0.0);
}

TEST_CASE("limit value is the value at the reference size") {
    const auto g = th::grid(1.0, 10);
    const BundledModel m = make_model("ou_meanfield");
    const StoppingPolicy pol = threshold_policy("state_above", {0.4});
    const auto a = limit_value(m.spec, pol, m.initial, 256, 8, g, Seeds{});
    const auto b = estimate_value(m.spec, 256, g, pol, m.initial, 8, Seeds{});
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    const auto big = limit_value(m.spec, pol, m.initial, 1024, 8, g, Seeds{5, 6, 7});
    CHECK(std::abs(big.mean - a.mean) <= 4.0 * std::hypot(a.std_error, big.std_error));
}

TEST_CASE("limit value differences shrink as the reference grows") {
    const auto g = th::grid(1.0, 10);
    const BundledModel m = make_model("ou_meanfield");
    const StoppingPolicy pol = threshold_policy("state_above", {0.4});
    std::vector<double> v;
    for (std::size_t M : {64, 256, 1024}) v.push_back(limit_value(m.spec, pol, m.initial, M, 16, g, Seeds{}).mean);
    CHECK(std::abs(v[2] - v[1]) < std::abs(v[1] - v[0]));
}
