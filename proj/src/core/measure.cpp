#include "mfstop/core/measure.hpp"

#include <algorithm>
#include <cmath>

#include "mfstop/error.hpp"
#include "mfstop/simd/kernels.hpp"

namespace mfstop {

StoppedTriple StoppedTriple::make(PathBundle state, PathBundle noise, double stop_time) {
    StoppedTriple t;
    t.state_cut = state.rows() == 0 ? 0 : state.rows() - 1;
    t.state = std::make_shared<const PathBundle>(std::move(state));
    t.noise = std::make_shared<const PathBundle>(std::move(noise));
    t.stop_time = stop_time;
    return t;
}

namespace {

double sup_state_distance(const StoppedTriple& a, const StoppedTriple& b) {
    const PathBundle& pa = *a.state;
    const PathBundle& pb = *b.state;
    const std::size_t rows = pa.rows();
    const std::size_t ca = std::min(a.state_cut, rows - 1);
    const std::size_t cb = std::min(b.state_cut, rows - 1);
    if (pa.dim() == 1) {
        const auto& k = simd::kernels();
        const double* xa = pa.coordinate(0).data();
        const double* xb = pb.coordinate(0).data();
        const std::size_t lo = std::min(ca, cb);
        double m = k.max_abs_diff(xa, xb, lo + 1);
        // Past the earlier freeze only the later path still moves.
        if (ca < cb) m = std::max(m, k.max_abs_dev(xb + lo + 1, xa[ca], cb - lo));
        if (cb < ca) m = std::max(m, k.max_abs_dev(xa + lo + 1, xb[cb], ca - lo));
        return m;
    }
    double m = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < pa.dim(); ++c) {
            const double d = a.state_at(r, c) - b.state_at(r, c);
            s += d * d;
        }
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

double sup_noise_distance(const PathBundle& a, const PathBundle& b) {
    if (a.dim() == 0) return 0.0;
    if (a.dim() == 1) return simd::kernels().max_abs_diff(a.coordinate(0).data(), b.coordinate(0).data(), a.rows());
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.dim(); ++c) {
            const double d = a(r, c) - b(r, c);
            s += d * d;
        }
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

}  // namespace

double triple_distance(const StoppedTriple& a, const StoppedTriple& b, const TimeGrid& grid) {
    const std::size_t rows = grid.size();
    if (a.state->rows() != rows || b.state->rows() != rows || a.noise->rows() != rows || b.noise->rows() != rows)
        throw IncompatibleOperands("atoms are not sampled on the given grid");
    if (a.state->dim() != b.state->dim() || a.noise->dim() != b.noise->dim())
        throw IncompatibleOperands("atoms have different dimensions");
    return sup_state_distance(a, b) + sup_noise_distance(*a.noise, *b.noise) + std::abs(a.stop_time - b.stop_time);
}

EmpiricalMeasure::EmpiricalMeasure(std::shared_ptr<const TimeGrid> grid, std::vector<StoppedTriple> atoms,
                                   std::vector<double> weights, std::size_t time_index)
    : grid_(std::move(grid)), atoms_(std::move(atoms)), weights_(std::move(weights)), time_index_(time_index) {
    if (!grid_) throw InvalidArgument("measure needs a grid");
    if (atoms_.empty()) throw InvalidArgument("empirical measure needs at least one atom");
    if (weights_.size() != atoms_.size()) throw InvalidArgument("one weight per atom required");
    if (time_index_ >= grid_->size()) throw InvalidArgument("measure time index outside the grid");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("weights must have positive mass");
    for (double& w : weights_) w /= total;

    const std::size_t rows = grid_->size();
    const std::size_t n = atoms_.front().state->dim();
    const std::size_t d = atoms_.front().noise->dim();
    for (const auto& a : atoms_) {
        if (!a.state || !a.noise) throw InvalidArgument("atom without paths");
        if (a.state->rows() != rows || a.noise->rows() != rows || a.state->dim() != n || a.noise->dim() != d)
            throw IncompatibleOperands("atoms must share one grid and dimensions");
        if (!(a.stop_time >= 0.0) || a.stop_time > grid_->horizon())
            throw InvalidArgument("atom stop time outside [0, T]");
    }

    uniform_ = std::ranges::all_of(weights_, [&](double w) { return w == weights_.front(); });
    state_mean_.assign(n, 0.0);
    const double now = time();
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const auto& a = atoms_[i];
        for (std::size_t c = 0; c < n; ++c) state_mean_[c] += weights_[i] * a.state_at(rows - 1, c);
        if (a.stop_time < now) stopped_mass_ += weights_[i];
    }
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::shared_ptr<const TimeGrid> grid, std::vector<StoppedTriple> atoms,
                                           std::size_t time_index) {
    std::vector<double> w(atoms.size(), 1.0);
    return EmpiricalMeasure(std::move(grid), std::move(atoms), std::move(w), time_index);
}

}  // namespace mfstop
