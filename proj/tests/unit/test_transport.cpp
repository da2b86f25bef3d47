#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mfstop/error.hpp"
#include "mfstop/transport/assignment.hpp"
#include "mfstop/transport/min_cost_flow.hpp"
#include "mfstop/transport/wasserstein.hpp"

using namespace mfstop;

namespace {

double brute_assignment(const std::vector<double>& c, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += c[i * n + perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// W_p by expanding both clouds into L equal-mass units and trying every
// matching of units.
double brute_wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p, std::size_t L) {
    std::vector<std::size_t> ua, ub;
    auto expand = [L](const EmpiricalMeasure& m, std::vector<std::size_t>& out) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto k = static_cast<std::size_t>(std::lround(m.weight(i) * static_cast<double>(L)));
            out.insert(out.end(), k, i);
        }
    };
    expand(a, ua);
    expand(b, ub);
    REQUIRE(ua.size() == L);
    REQUIRE(ub.size() == L);
    std::vector<double> c(L * L);
    for (std::size_t u = 0; u < L; ++u)
        for (std::size_t v = 0; v < L; ++v) c[u * L + v] = std::pow(triple_distance(a.atom(ua[u]), b.atom(ub[v]), a.grid()), p);
    return std::pow(brute_assignment(c, L) / static_cast<double>(L), 1.0 / p);
}

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed, bool integral) {
    const CounterRng rng(seed, Stream::Search);
    std::vector<double> c(n * n);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double u = rng.uniform({0, k, 0, 0});
        c[k] = integral ? std::floor(u * 4.0) : u * 10.0;
    }
    return c;
}

}  // namespace

TEST_CASE("assignment matches permutation search") {
    for (std::uint64_t s = 0; s < 300; ++s) {
        const std::size_t n = 1 + s % 8;
        const auto c = random_matrix(n, s, s % 3 == 0);  // every third case is full of ties
        const Assignment a = solve_assignment(c, n);
        CAPTURE(s);
        CHECK(a.cost == doctest::Approx(brute_assignment(c, n)).epsilon(1e-12));
        std::vector<std::size_t> cols = a.row_to_col;
        std::ranges::sort(cols);
        for (std::size_t k = 0; k < n; ++k) CHECK(cols[k] == k);
    }
}

TEST_CASE("assignment input checks") {
    CHECK_THROWS_AS(solve_assignment(std::vector<double>{1.0, 2.0}, 2), InvalidArgument);
    CHECK_THROWS_AS(solve_assignment(std::vector<double>{1.0, NAN, 0.0, 1.0}, 2), InvalidArgument);
    CHECK(solve_assignment(std::vector<double>{}, 0).cost == 0.0);
}

TEST_CASE("transport matches the unit-expanded assignment") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const CounterRng rng(s, Stream::Search);
        const std::size_t rows = 1 + s % 3, cols = 1 + (s / 3) % 3;
        std::vector<std::int64_t> supply(rows, 1), demand(cols, 1);
        // Spread 6 units over each side.
        std::int64_t left = 6 - static_cast<std::int64_t>(rows);
        for (std::size_t k = 0; left > 0; ++k, --left) ++supply[static_cast<std::size_t>(rng.uniform({1, k, 0, 0}) * rows)];
        left = 6 - static_cast<std::int64_t>(cols);
        for (std::size_t k = 0; left > 0; ++k, --left) ++demand[static_cast<std::size_t>(rng.uniform({2, k, 0, 0}) * cols)];
        std::vector<double> c(rows * cols);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = std::floor(rng.uniform({3, k, 0, 0}) * 5.0);

        std::vector<std::size_t> ru, cu;
        for (std::size_t i = 0; i < rows; ++i) ru.insert(ru.end(), static_cast<std::size_t>(supply[i]), i);
        for (std::size_t j = 0; j < cols; ++j) cu.insert(cu.end(), static_cast<std::size_t>(demand[j]), j);
        std::vector<double> big(36);
        for (std::size_t u = 0; u < 6; ++u)
            for (std::size_t v = 0; v < 6; ++v) big[u * 6 + v] = c[ru[u] * cols + cu[v]];

        const TransportPlan plan = solve_transport(c, rows, cols, supply, demand);
        CAPTURE(s);
        CHECK(plan.cost == brute_assignment(big, 6));
        std::vector<std::int64_t> out(rows, 0), in(cols, 0);
        for (const auto& f : plan.flows) {
            out[f.source] += f.amount;
            in[f.sink] += f.amount;
        }
        CHECK(out == supply);
        CHECK(in == demand);
    }
}

TEST_CASE("transport input checks") {
    const std::vector<double> c{1, 2, 3, 4};
    const std::vector<std::int64_t> s{1, 1}, d{2, 1};
    CHECK_THROWS_AS(solve_transport(c, 2, 2, s, d), InvalidArgument);
    const std::vector<std::int64_t> neg{-1, 3};
    CHECK_THROWS_AS(solve_transport(c, 2, 2, neg, s), InvalidArgument);
}

TEST_CASE("weight rationalization keeps the total exact") {
    const std::vector<double> w{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const auto u = rationalize_weights(w, 1000000);
    CHECK(std::accumulate(u.begin(), u.end(), std::int64_t{0}) == 1000000);
    for (auto x : u) CHECK(std::abs(x - 333333) <= 1);
    const std::vector<double> v{0.7, 0.2, 0.1};
    CHECK(rationalize_weights(v, 10) == std::vector<std::int64_t>{7, 2, 1});
    CHECK_THROWS_AS(rationalize_weights(std::vector<double>{0.0, 0.0}, 10), InvalidArgument);
}

TEST_CASE("exact distance examples") {
    const auto g = th::grid(1.0, 4);
    const auto mu = th::random_cloud(g, 5, 3);
    CHECK(wasserstein_exact(mu, mu, 2.0) == 0.0);

    const auto a = th::constant_atom(*g, 0.0, 0.0, 0.5), b = th::constant_atom(*g, 1.5, 0.0, 0.25);
    const EmpiricalMeasure one_a = EmpiricalMeasure::uniform(g, {a}, 4), one_b = EmpiricalMeasure::uniform(g, {b}, 4);
    CHECK(wasserstein_exact(one_a, one_b, 1.0) == doctest::Approx(triple_distance(a, b, *g)));
    CHECK(wasserstein_exact(one_a, one_b, 2.0) == doctest::Approx(triple_distance(a, b, *g)));

    const EmpiricalMeasure x = EmpiricalMeasure::uniform(
        g, {th::constant_atom(*g, 0.0, 0.0, 1.0), th::constant_atom(*g, 1.0, 0.0, 1.0)}, 4);
    const EmpiricalMeasure y = EmpiricalMeasure::uniform(
        g, {th::constant_atom(*g, 0.0, 0.0, 1.0), th::constant_atom(*g, 2.0, 0.0, 1.0)}, 4);
    CHECK(wasserstein_exact(x, y, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("exact distance equals permutation search on small uniform clouds") {
    const auto g = th::grid(1.0, 5);
    for (std::uint64_t s = 0; s < 120; ++s) {
        const std::size_t n = 1 + s % 7;
        const auto a = th::random_cloud(g, n, 1000 + s), b = th::random_cloud(g, n, 5000 + s);
        const double p = s % 2 ? 1.0 : 2.0;
        CAPTURE(s);
        CHECK(std::abs(wasserstein_exact(a, b, p) - brute_wasserstein(a, b, p, n)) <= 1e-12);
    }
}

TEST_CASE("unequal and weighted clouds agree with unit expansion") {
    const auto g = th::grid(1.0, 3);
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto a = th::random_cloud(g, 2, 200 + s), b = th::random_cloud(g, 3, 300 + s);
        CHECK(exact_method(a, b) == ExactMethod::ReplicatedAssignment);
        CHECK(std::abs(wasserstein_exact(a, b, 2.0) - brute_wasserstein(a, b, 2.0, 6)) <= 1e-12);

        std::vector<StoppedTriple> atoms(a.atoms());
        const EmpiricalMeasure wa(g, atoms, {1.0, 5.0}, 3);
        std::vector<StoppedTriple> more(b.atoms());
        const EmpiricalMeasure wb(g, more, {2.0, 1.0, 3.0}, 3);
        CHECK(exact_method(wa, wb) == ExactMethod::MinCostFlow);
        CHECK(std::abs(wasserstein_exact(wa, wb, 1.0) - brute_wasserstein(wa, wb, 1.0, 6)) <= 1e-9);
    }
}

TEST_CASE("exact distance is a metric and increases with p") {
    const auto g = th::grid(1.0, 4);
    for (std::uint64_t s = 0; s < 40; ++s) {
        const std::size_t n = 4 + s % 13;
        const auto a = th::random_cloud(g, n, 10 * s), b = th::random_cloud(g, n, 10 * s + 1),
                   c = th::random_cloud(g, n, 10 * s + 2);
        const double ab = wasserstein_exact(a, b, 2.0), ba = wasserstein_exact(b, a, 2.0);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(wasserstein_exact(a, c, 2.0) <= ab + wasserstein_exact(b, c, 2.0) + 1e-9);
        CHECK(wasserstein_exact(a, b, 1.0) <= ab + 1e-12);
    }
}

TEST_CASE("exact distance refuses oversized or mismatched clouds") {
    const auto g = th::grid(1.0, 1);
    std::vector<StoppedTriple> atoms(kExactTransportCapacity + 1, th::constant_atom(*g, 0.0, 0.0, 0.0));
    const auto big = EmpiricalMeasure::uniform(g, atoms, 1);
    const auto small = EmpiricalMeasure::uniform(g, {atoms[0]}, 1);
    CHECK_THROWS_AS(wasserstein_exact(big, small, 2.0), CapacityExceeded);
    const auto other = th::grid(1.0, 2);
    const auto far = EmpiricalMeasure::uniform(other, {th::constant_atom(*other, 0.0, 0.0, 0.0)}, 2);
    CHECK_THROWS_AS(wasserstein_exact(small, far, 2.0), IncompatibleOperands);
    CHECK_THROWS_AS(wasserstein_exact(small, small, 0.5), InvalidArgument);
}

TEST_CASE("sliced distance") {
    const auto g = th::grid(1.0, 4);
    const auto a = th::random_cloud(g, 8, 1), b = th::random_cloud(g, 8, 2);
    for (std::uint64_t seed : {1u, 2u, 99u}) CHECK(wasserstein_sliced(a, a, 2.0, 16, seed) == 0.0);

    // Constant 1-d paths with shared noise and stop time: one direction is enough.
    std::vector<StoppedTriple> xs, ys;
    for (double v : {0.0, 1.0, 4.0, -2.0}) xs.push_back(th::constant_atom(*g, v, 0.3, 0.5));
    for (double v : {0.5, 3.0, -1.0, 2.0}) ys.push_back(th::constant_atom(*g, v, 0.3, 0.5));
    const auto x = EmpiricalMeasure::uniform(g, xs, 4), y = EmpiricalMeasure::uniform(g, ys, 4);
    for (double p : {1.0, 2.0})
        CHECK(wasserstein_sliced(x, y, p, 8, 5) == doctest::Approx(wasserstein_exact(x, y, p)).epsilon(1e-12));

    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto u = th::random_cloud(g, 8, 40 + s), v = th::random_cloud(g, 8, 400 + s);
        const double exact = wasserstein_exact(u, v, 2.0);
        const double sliced = wasserstein_sliced(u, v, 2.0, 32, s);
        CHECK(sliced >= 0.0);
        CHECK(sliced <= exact * (1.0 + 1e-12));
    }
}

TEST_CASE("one-dimensional distance") {
    CHECK(wasserstein_1d({0.0, 1.0}, {1, 1}, {0.0, 2.0}, {1, 1}, 1.0) == doctest::Approx(0.5));
    CHECK(wasserstein_1d({0.0}, {1}, {1.0, 3.0}, {1, 1}, 2.0) == doctest::Approx(std::sqrt(5.0)));
    CHECK_THROWS_AS(wasserstein_1d({}, {}, {1.0}, {1.0}, 1.0), InvalidArgument);
}
