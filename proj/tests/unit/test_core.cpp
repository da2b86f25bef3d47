#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mfstop/core/parallel.hpp"
#include "mfstop/error.hpp"
#include "mfstop/models/registry.hpp"

using namespace mfstop;

TEST_CASE("make_grid spacing") {
    const TimeGrid a = make_grid(1.0, 2);
    REQUIRE(a.size() == 3);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 0.5);
    CHECK(a[2] == 1.0);
    const TimeGrid b = make_grid(1.0, 1);
    CHECK(b.size() == 2);
    CHECK(b[1] == 1.0);
    CHECK(make_grid(2.0, 4).mesh() == 0.5);
    CHECK(make_grid(3.0, 7)[7] == 3.0);
}

TEST_CASE("make_grid rejects bad input") {
    CHECK_THROWS_AS(make_grid(0.0, 4), InvalidArgument);
    CHECK_THROWS_AS(make_grid(-1.0, 4), InvalidArgument);
    CHECK_THROWS_AS(make_grid(1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(1.0, -3), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid({0.1, 1.0}), InvalidArgument);
}

TEST_CASE("cell_of uses half-open cells and maps T to the last index") {
    const TimeGrid g = make_grid(1.0, 4);
    CHECK(g.cell_of(0.0) == 0);
    CHECK(g.cell_of(0.25) == 1);
    CHECK(g.cell_of(0.2499) == 0);
    CHECK(g.cell_of(0.99) == 3);
    CHECK(g.cell_of(1.0) == 4);
}

TEST_CASE("path view hides rows past the visible index") {
    PathBundle p(5, 2);
    for (std::size_t r = 0; r < 5; ++r) {
        p(r, 0) = static_cast<double>(r);
        p(r, 1) = -static_cast<double>(r);
    }
    const PathView v(p, 2);
    CHECK(v.current() == 2.0);
    CHECK(v.current(1) == -2.0);
    CHECK_THROWS_AS(v.at(3), ContractViolation);
    const PathView frozen(p, 4, 1);
    CHECK(frozen.at(4) == 1.0);
    CHECK(frozen.at(0) == 0.0);
    CHECK_THROWS_AS(v.narrowed(3), ContractViolation);
    CHECK(v.narrowed(1).current() == 1.0);
}

TEST_CASE("triple distance examples") {
    const TimeGrid g = make_grid(1.0, 4);
    const auto a = th::constant_atom(g, 1.0, 0.5, 0.25);
    CHECK(triple_distance(a, a, g) == 0.0);
    CHECK(triple_distance(a, th::constant_atom(g, 3.0, 0.5, 0.25), g) == 2.0);
    CHECK(triple_distance(th::constant_atom(g, 1.0, 0.5, 0.25), th::constant_atom(g, 1.0, 0.5, 0.75), g) == 0.5);
}

TEST_CASE("triple distance honours the state freeze") {
    const TimeGrid g = make_grid(1.0, 2);
    PathBundle x(3, 1);
    x(0, 0) = 0.0;
    x(1, 0) = 1.0;
    x(2, 0) = 5.0;
    auto a = StoppedTriple::make(x, PathBundle(3, 1), 0.5);
    a.state_cut = 1;  // x_{t1 ∧ ·}: the 5 is never seen
    auto b = th::constant_atom(g, 1.0, 0.0, 0.5);
    CHECK(triple_distance(a, b, g) == 1.0);
}

TEST_CASE("triple distance triangle inequality on random atoms") {
    const auto g = th::grid(1.0, 6);
    const CounterRng rng(99, Stream::Search);
    for (std::uint64_t k = 0; k < 500; ++k) {
        const auto a = th::random_atom(*g, rng, 3 * k, 2, 2);
        const auto b = th::random_atom(*g, rng, 3 * k + 1, 2, 2);
        const auto c = th::random_atom(*g, rng, 3 * k + 2, 2, 2);
        const double ab = triple_distance(a, b, *g), bc = triple_distance(b, c, *g), ac = triple_distance(a, c, *g);
        CHECK(ac <= ab + bc + 1e-12);
        CHECK(ab == doctest::Approx(triple_distance(b, a, *g)).epsilon(1e-15));
    }
}

TEST_CASE("empirical measure normalizes weights") {
    const auto g = th::grid(1.0, 2);
    std::vector<StoppedTriple> atoms{th::constant_atom(*g, 1.0, 0.0, 0.0), th::constant_atom(*g, 3.0, 0.0, 0.0),
                                     th::constant_atom(*g, 7.0, 0.0, 0.5)};
    const EmpiricalMeasure m(g, atoms, {1.0, 1.0, 2.0}, 1);
    const auto w = m.weights();
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.state_mean()[0] == doctest::Approx(0.25 * 1 + 0.25 * 3 + 0.5 * 7));
    CHECK_FALSE(m.is_uniform());
    const auto u = EmpiricalMeasure::uniform(g, atoms, 1);
    CHECK(u.is_uniform());
    CHECK(u.weight(0) == doctest::Approx(1.0 / 3.0));
    CHECK(u.stopped_mass() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empirical measure rejects bad construction") {
    const auto g = th::grid(1.0, 2);
    std::vector<StoppedTriple> atoms{th::constant_atom(*g, 1.0, 0.0, 0.0)};
    CHECK_THROWS_AS(EmpiricalMeasure(g, {}, {}, 0), InvalidArgument);
    CHECK_THROWS_AS(EmpiricalMeasure(g, atoms, {-1.0}, 0), InvalidArgument);
    CHECK_THROWS_AS(EmpiricalMeasure(g, atoms, {1.0, 2.0}, 0), InvalidArgument);
    CHECK_THROWS_AS(EmpiricalMeasure(g, atoms, {1.0}, 3), InvalidArgument);
    const auto other = th::grid(1.0, 3);
    CHECK_THROWS(EmpiricalMeasure(g, {th::constant_atom(*other, 0.0, 0.0, 0.0)}, {1.0}, 0));
}

TEST_CASE("philox known answers") {
    using A = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter rng draws are pure functions of their index") {
    const CounterRng a(5, Stream::Idiosyncratic), b(5, Stream::Idiosyncratic), c(5, Stream::Common);
    CHECK(a.normal({1, 2, 3, 0}) == b.normal({1, 2, 3, 0}));
    CHECK(a.normal({1, 2, 3, 0}) != c.normal({1, 2, 3, 0}));
    CHECK(a.normal({1, 2, 3, 0}) != a.normal({1, 2, 4, 0}));
    double sum = 0.0, sq = 0.0, lo = 1.0, hi = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = a.normal({0, static_cast<std::uint64_t>(i), 0, 0});
        sum += z;
        sq += z * z;
        const double u = a.uniform({1, static_cast<std::uint64_t>(i), 0, 0});
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    for (int threads : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) hits[i]++;
        });
        bool once = true;
        for (auto& h : hits) once = once && h.load() == 1;
        CHECK(once);
    }
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t b, std::size_t) {
                                     if (b > 0) throw InvalidArgument("boom");
                                 }),
                    InvalidArgument);
}

TEST_CASE("error kinds") {
    const NumericalBlowup e("x", 3, 7);
    CHECK(e.kind() == ErrorKind::NumericalBlowup);
    CHECK(e.step() == 3);
    CHECK(e.particle() == 7);
    CHECK(ConfigError("bad", 12).line() == 12);
}

TEST_CASE("bundled models pass the shape check on 1000 random inputs") {
    const TimeGrid g = make_grid(1.0, 10);
    for (const auto& id : registry_ids()) {
        const BundledModel m = make_model(id);
        const ShapeCheckReport r = check_model_shapes(m.spec, g, 1000, 17);
        CHECK(r.samples == 1000);
        CHECK(r.max_abs_reward <= m.spec.reward_bound);
    }
}

TEST_CASE("shape check catches a wrong-shaped coefficient and a reward over its bound") {
    const TimeGrid g = make_grid(1.0, 4);
    ModelSpec bad = th::scalar_model(0.0, 1.0, 0.0);
    bad.diffusion = [](double, const PathView&, const EmpiricalMeasure&, std::vector<double>& out) { out.assign(2, 1.0); };
    CHECK_THROWS_AS(check_model_shapes(bad, g, 10, 1), ContractViolation);
    ModelSpec loud = th::scalar_model(0.0, 1.0, 0.0, th::zero_f,
                                      [](double, const PathView&, const EmpiricalMeasure&) { return 5.0; });
    loud.reward_bound = 1.0;
    CHECK_THROWS_AS(check_model_shapes(loud, g, 10, 1), ContractViolation);
}

TEST_CASE("registry rejects unknown ids and parameters") {
    CHECK_THROWS_AS(make_model("nope"), InvalidArgument);
    CHECK_THROWS_AS(make_model("ou_meanfield", {{"thetaa", 1.0}}), InvalidArgument);
    CHECK(make_model("ou_meanfield", {{"theta", 2.0}}).params.at("theta") == 2.0);
}

TEST_CASE("initial laws") {
    const auto d = InitialLaw::discrete({{-1.0}, {2.0}}, {0.25, 0.75});
    CHECK(d.mean()[0] == doctest::Approx(1.25));
    CHECK_THROWS_AS(InitialLaw::discrete({{0.0}}, {0.5}), InvalidArgument);
    CHECK_THROWS_AS(InitialLaw::gaussian({0.0}, {-1.0}), InvalidArgument);
    std::vector<double> out(1);
    d.sample([](std::size_t) { return 0.1; }, [](std::size_t) { return 0.0; }, out);
    CHECK(out[0] == -1.0);
    d.sample([](std::size_t) { return 0.3; }, [](std::size_t) { return 0.0; }, out);
    CHECK(out[0] == 2.0);
}
