#include "mfstop/transport/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfstop/core/parallel.hpp"
#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/simd/kernels.hpp"
#include "mfstop/transport/assignment.hpp"
#include "mfstop/transport/min_cost_flow.hpp"

namespace mfstop {

namespace {

constexpr std::int64_t kRationalDenominator = 1'000'000;
constexpr std::int64_t kSmallDenominator = 4096;

// Smallest D <= 4096 putting every normalized weight of both measures on the
// grid 1/D (to 1e-9), else the fine fallback grid.
std::int64_t common_denominator(std::span<const double> a, std::span<const double> b) {
    double ta = 0.0, tb = 0.0;
    for (double w : a) ta += w;
    for (double w : b) tb += w;
    auto fits = [](std::span<const double> w, double total, double D) {
        for (double x : w) {
            const double u = x / total * D;
            if (std::abs(u - std::round(u)) > 1e-9) return false;
        }
        return true;
    };
    for (std::int64_t D = 1; D <= kSmallDenominator; ++D)
        if (fits(a, ta, static_cast<double>(D)) && fits(b, tb, static_cast<double>(D))) return D;
    return kRationalDenominator;
}

void check_pair(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("Wasserstein order p must be finite and >= 1");
    if (!(mu1.grid() == mu2.grid())) throw IncompatibleOperands("measures live on different grids");
    const auto& a = mu1.atom(0);
    const auto& b = mu2.atom(0);
    if (a.state->dim() != b.state->dim() || a.noise->dim() != b.noise->dim())
        throw IncompatibleOperands("measures have different path dimensions");
}

double pow_p(double x, double p) {
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    return std::pow(x, p);
}

double root_p(double x, double p) {
    if (x <= 0.0) return 0.0;
    if (p == 1.0) return x;
    if (p == 2.0) return std::sqrt(x);
    return std::pow(x, 1.0 / p);
}

}  // namespace

std::string_view to_string(ExactMethod method) {
    switch (method) {
        case ExactMethod::Assignment: return "assignment";
        case ExactMethod::ReplicatedAssignment: return "replicated-assignment";
        case ExactMethod::MinCostFlow: return "min-cost-flow";
    }
    return "?";
}

ExactMethod exact_method(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2) {
    if (mu1.is_uniform() && mu2.is_uniform()) {
        if (mu1.size() == mu2.size()) return ExactMethod::Assignment;
        if (std::lcm(mu1.size(), mu2.size()) <= kExactTransportCapacity) return ExactMethod::ReplicatedAssignment;
    }
    return ExactMethod::MinCostFlow;
}

std::vector<double> cost_matrix(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p, int threads) {
    check_pair(mu1, mu2, p);
    const std::size_t n1 = mu1.size(), n2 = mu2.size();
    std::vector<double> c(n1 * n2);
    const TimeGrid& grid = mu1.grid();
    parallel_for(
        n1, threads,
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    c[i * n2 + j] = pow_p(triple_distance(mu1.atom(i), mu2.atom(j), grid), p);
        },
        16);
    return c;
}

double wasserstein_exact(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p, int threads) {
    check_pair(mu1, mu2, p);
    if (mu1.size() > kExactTransportCapacity || mu2.size() > kExactTransportCapacity)
        throw CapacityExceeded("exact transport supports at most " + std::to_string(kExactTransportCapacity) +
                               " atoms per measure (got " + std::to_string(mu1.size()) + " and " +
                               std::to_string(mu2.size()) + "); use the sliced estimator");
    if (&mu1 == &mu2) return 0.0;
    const std::size_t n1 = mu1.size(), n2 = mu2.size();
    const std::vector<double> c = cost_matrix(mu1, mu2, p, threads);

    switch (exact_method(mu1, mu2)) {
        case ExactMethod::Assignment: {
            const Assignment a = solve_assignment(c, n1);
            return root_p(a.cost / static_cast<double>(n1), p);
        }
        case ExactMethod::ReplicatedAssignment: {
            // Both clouds split into L = lcm(n1, n2) units of mass 1/L; an
            // optimal plan between integral masses has an integral optimum.
            const std::size_t L = std::lcm(n1, n2);
            const std::size_t r1 = L / n1, r2 = L / n2;
            std::vector<double> big(L * L);
            for (std::size_t u = 0; u < L; ++u) {
                const double* src = c.data() + (u / r1) * n2;
                double* dst = big.data() + u * L;
                for (std::size_t w = 0; w < L; ++w) dst[w] = src[w / r2];
            }
            const Assignment a = solve_assignment(big, L);
            return root_p(a.cost / static_cast<double>(L), p);
        }
        case ExactMethod::MinCostFlow: {
            std::vector<std::int64_t> s, d;
            std::int64_t D = 0;
            if (mu1.is_uniform() && mu2.is_uniform()) {
                // Exact rational masses when the lcm fits in 64 bits.
                D = static_cast<std::int64_t>(std::lcm(n1, n2));
                s.assign(n1, D / static_cast<std::int64_t>(n1));
                d.assign(n2, D / static_cast<std::int64_t>(n2));
            } else {
                D = common_denominator(mu1.weights(), mu2.weights());
                s = rationalize_weights(mu1.weights(), D);
                d = rationalize_weights(mu2.weights(), D);
            }
            const TransportPlan plan = solve_transport(c, n1, n2, s, d);
            return root_p(plan.cost / static_cast<double>(D), p);
        }
    }
    return 0.0;
}

double wasserstein_1d(std::vector<double> x, std::vector<double> wx, std::vector<double> y, std::vector<double> wy,
                      double p) {
    if (x.size() != wx.size() || y.size() != wy.size() || x.empty() || y.empty())
        throw InvalidArgument("1-d Wasserstein needs non-empty samples with one weight each");
    auto sorted = [](std::vector<double>& v, std::vector<double>& w) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::ranges::stable_sort(idx, [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> vs(v.size()), ws(v.size());
        double total = 0.0;
        for (double m : w) total += m;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            vs[k] = v[idx[k]];
            ws[k] = w[idx[k]] / total;
        }
        v = std::move(vs);
        w = std::move(ws);
    };
    sorted(x, wx);
    sorted(y, wy);

    if (x.size() == y.size() && std::ranges::all_of(wx, [&](double m) { return m == wx[0]; }) &&
        std::ranges::all_of(wy, [&](double m) { return m == wy[0]; })) {
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) s += pow_p(std::abs(x[k] - y[k]), p);
        return root_p(s / static_cast<double>(x.size()), p);
    }
    // Walk both quantile functions, moving the smaller remaining mass.
    std::size_t i = 0, j = 0;
    double ri = wx[0], rj = wy[0], s = 0.0;
    while (i < x.size() && j < y.size()) {
        const double m = std::min(ri, rj);
        s += m * pow_p(std::abs(x[i] - y[j]), p);
        ri -= m;
        rj -= m;
        if (ri <= 0.0 && ++i < x.size()) ri = wx[i];
        if (rj <= 0.0 && ++j < y.size()) rj = wy[j];
    }
    return root_p(s, p);
}

double wasserstein_sliced(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p, std::size_t projections,
                          std::uint64_t seed) {
    check_pair(mu1, mu2, p);
    if (projections < 1) throw InvalidArgument("sliced Wasserstein needs at least one projection");
    const std::size_t rows = mu1.grid().size();
    const std::size_t n = mu1.atom(0).state->dim();
    const std::size_t d = mu1.atom(0).noise->dim();
    const CounterRng rng(seed, Stream::Projection);
    const auto& kern = simd::kernels();

    std::vector<double> alpha(rows), beta(rows), u(n), v(d), px, py, proj_x(rows);
    std::vector<double> w1(mu1.weights().begin(), mu1.weights().end());
    std::vector<double> w2(mu2.weights().begin(), mu2.weights().end());

    auto convex = [&](std::vector<double>& out, std::uint64_t r, std::uint64_t block) {
        double total = 0.0;
        for (std::size_t k = 0; k < rows; ++k) {
            out[k] = -std::log(rng.uniform({r, block, k, 0}));
            total += out[k];
        }
        const double sign = rng.sign({r, block, rows, 0});
        for (double& a : out) a = sign * a / total;
    };
    auto unit = [&](std::vector<double>& out, std::uint64_t r, std::uint64_t block) {
        if (out.empty()) return;
        double norm = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = rng.normal({r, block, k, 1});
            norm += out[k] * out[k];
        }
        norm = std::sqrt(norm);
        for (double& a : out) a /= norm;
    };
    auto project = [&](const StoppedTriple& t, double tau_sign) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t k = 0; k < rows; ++k) proj_x[k] = t.state_at(k, c);
            s += u[c] * kern.dot(alpha.data(), proj_x.data(), rows);
        }
        for (std::size_t c = 0; c < d; ++c) s += v[c] * kern.dot(beta.data(), t.noise->coordinate(c).data(), rows);
        return s + tau_sign * t.stop_time;
    };

    double total = 0.0;
    for (std::size_t r = 0; r < projections; ++r) {
        convex(alpha, r, 0);
        convex(beta, r, 1);
        unit(u, r, 2);
        unit(v, r, 3);
        const double tau_sign = rng.sign({r, 4, 0, 0});
        px.resize(mu1.size());
        py.resize(mu2.size());
        for (std::size_t i = 0; i < mu1.size(); ++i) px[i] = project(mu1.atom(i), tau_sign);
        for (std::size_t i = 0; i < mu2.size(); ++i) py[i] = project(mu2.atom(i), tau_sign);
        total += wasserstein_1d(px, w1, py, w2, p);
    }
    return total / static_cast<double>(projections);
}

}  // namespace mfstop
