#include <cmath>
#include <limits>

#include "mfstop/error.hpp"
#include "mfstop/oracle/tree.hpp"
#include "tree_internal.hpp"

namespace mfstop {

namespace {

constexpr double kWorkLimit = 1e8;

// Units of one (X_0, W-prefix) group that share a status. Alive units are
// counted at resolution Q^{j+1} at step j; `frac` is units / Q^{j+1}, fixed
// when the cohort is created.
struct Cohort {
    std::size_t x0 = 0;
    std::uint64_t wcode = 0;
    std::size_t wlen = 0;
    std::ptrdiff_t stop = -1;  // -1 while alive
    long long units = 0;
    double frac = 1.0;
    long double base = 1.0L;  // P(X_0) · P(W-prefix)
    std::shared_ptr<PathBundle> x;
};

using Decision = std::pair<TreeTable::key_type, bool>;

class TreeDp {
public:
    TreeDp(const TreeModel& tree, bool randomized)
        : tree_(tree),
          Q_(randomized ? static_cast<long long>(tree.u_levels()) : 1),
          grid_(tree.grid()),
          noise_(tree_detail::all_noise_paths(tree)) {
        tree_.validate();
        const std::size_t D = tree_.depth, kw = tree_.dW.size();
        suffix_prob_.resize(D + 1);
        for (std::size_t len = 0; len <= D; ++len) {
            // Probability of every W suffix of length D − len.
            std::size_t count = 1;
            for (std::size_t k = len; k < D; ++k) count *= kw;
            suffix_prob_[len].assign(count, 1.0L);
            for (std::size_t code = 0; code < count; ++code) {
                std::size_t rest = code, scale = count;
                for (std::size_t k = len; k < D; ++k) {
                    scale /= kw;
                    suffix_prob_[len][code] *= boost::rational_cast<long double>(tree_.dW.probabilities[rest / scale]);
                    rest %= scale;
                }
            }
        }
        for (std::size_t j = 0; j <= D + 1; ++j) resolution_.push_back(j == 0 ? 1 : resolution_.back() * Q_);
    }

    long double solve(std::vector<Decision>* decisions) {
        std::vector<Cohort> pop;
        for (std::size_t i = 0; i < tree_.initial.size(); ++i) {
            Cohort c;
            c.x0 = i;
            c.units = Q_;
            c.frac = 1.0;
            c.base = boost::rational_cast<long double>(tree_.initial.probabilities[i]);
            c.x = std::make_shared<PathBundle>(tree_.depth + 1, 1);
            (*c.x)(0, 0) = tree_.initial.values[i];
            pop.push_back(std::move(c));
        }
        return node(0, pop, 0, decisions);
    }

    std::size_t evaluations() const noexcept { return evaluations_; }

private:
    EmpiricalMeasure measure(const std::vector<Cohort>& pop, std::size_t j) const {
        std::vector<StoppedTriple> atoms;
        std::vector<double> weights;
        for (const auto& c : pop) {
            const std::size_t cut = c.stop < 0 ? j : static_cast<std::size_t>(c.stop);
            const auto& suffix = suffix_prob_[c.wlen];
            const std::uint64_t scale = suffix.size();
            for (std::uint64_t r = 0; r < scale; ++r) {
                atoms.push_back(StoppedTriple{c.x, cut, noise_[c.wcode * scale + r], (*grid_)[cut]});
                weights.push_back(static_cast<double>(c.base * c.frac * suffix[r]));
            }
        }
        return EmpiricalMeasure(grid_, std::move(atoms), std::move(weights), j);
    }

    long double node(std::size_t j, const std::vector<Cohort>& pop, std::uint64_t bcode,
                     std::vector<Decision>* decisions) {
        const std::size_t D = tree_.depth, kw = tree_.dW.size(), kb = tree_.dB.size();
        const ModelSpec& model = tree_.model;
        const EmpiricalMeasure mu = measure(pop, j);
        if (j == D) {
            ++evaluations_;
            long double v = 0.0L;
            for (const auto& c : pop) {
                const std::size_t st = c.stop < 0 ? D : static_cast<std::size_t>(c.stop);
                v += c.base * c.frac * model.terminal_reward((*grid_)[st], PathView(*c.x, D, st), mu);
            }
            return v;
        }

        const double t = (*grid_)[j];
        const double h = grid_->dt(j);
        struct Live {
            std::size_t index;
            double f, b, sig, sig0;
        };
        std::vector<Live> live;
        std::vector<double> coef;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto& c = pop[i];
            if (c.stop >= 0) continue;
            const PathView view(*c.x, j, j);
            Live l{i, model.running_reward(t, view, mu), 0.0, 0.0, 0.0};
            model.drift(t, view, mu, coef);
            l.b = coef.at(0);
            model.diffusion(t, view, mu, coef);
            l.sig = coef.at(0);
            if (model.l > 0) {
                model.common_diffusion(t, view, mu, coef);
                l.sig0 = coef.at(0);
            }
            live.push_back(l);
        }
        const std::size_t m = live.size();
        const double res = static_cast<double>(resolution_[j + 1]);

        std::vector<long long> k(m, 0);
        auto evaluate = [&](std::vector<Decision>* out) {
            long double local = 0.0L;
            for (std::size_t g = 0; g < m; ++g) {
                const auto& c = pop[live[g].index];
                const double frac_cont = static_cast<double>(c.units - k[g]) / res;
                local += c.base * frac_cont * live[g].f * h;
                if (out) out->push_back({{j, c.x0, c.wcode, bcode}, k[g] == c.units});
            }
            long double expected = 0.0L;
            for (std::size_t bi = 0; bi < kb; ++bi) {
                std::vector<Cohort> next;
                for (const auto& c : pop)
                    if (c.stop >= 0) next.push_back(c);
                for (std::size_t g = 0; g < m; ++g) {
                    const auto& c = pop[live[g].index];
                    if (k[g] > 0) {
                        Cohort s = c;
                        s.stop = static_cast<std::ptrdiff_t>(j);
                        s.units = k[g];
                        s.frac = static_cast<double>(k[g]) / res;
                        next.push_back(std::move(s));
                    }
                }
                for (std::size_t g = 0; g < m; ++g) {
                    const auto& c = pop[live[g].index];
                    if (k[g] == c.units) continue;
                    const long long units = (c.units - k[g]) * Q_;
                    const double x_next_base = (*c.x)(j, 0);
                    for (std::size_t wi = 0; wi < kw; ++wi) {
                        Cohort a;
                        a.x0 = c.x0;
                        a.wcode = c.wcode * kw + wi;
                        a.wlen = c.wlen + 1;
                        a.units = units;
                        a.frac = static_cast<double>(units) / static_cast<double>(resolution_[j + 2]);
                        a.base = c.base * boost::rational_cast<long double>(tree_.dW.probabilities[wi]);
                        a.x = std::make_shared<PathBundle>(*c.x);
                        (*a.x)(j + 1, 0) = tree_detail::euler_step(x_next_base, live[g].b, live[g].sig,
                                                                   live[g].sig0, h, tree_.dW.values[wi],
                                                                   tree_.dB.values[bi]);
                        next.push_back(std::move(a));
                    }
                }
                const long double pb = boost::rational_cast<long double>(tree_.dB.probabilities[bi]);
                expected += pb * node(j + 1, next, bcode * kb + bi, out);
            }
            return local + expected;
        };

        long double best = -std::numeric_limits<long double>::infinity();
        std::vector<Decision> best_rec, rec;
        std::vector<Decision>* rec_ptr = decisions ? &rec : nullptr;
        auto consider = [&](bool interior) {
            rec.clear();
            const long double v = evaluate(rec_ptr);
            const long double margin = interior ? 1e-12L * std::max(1.0L, std::fabs(best)) : 0.0L;
            if (v > best + margin) {
                best = v;
                if (decisions) best_rec.swap(rec);
            }
        };

        // Pure choices first (each group all-stop or all-continue) so that
        // interior choices only win on a strict, non-rounding improvement.
        if (m >= 63) throw CapacityExceeded("too many live groups at one tree node");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            for (std::size_t g = 0; g < m; ++g) k[g] = (mask >> g) & 1 ? pop[live[g].index].units : 0;
            consider(false);
        }
        if (Q_ > 1) {
            std::ranges::fill(k, 0);
            for (;;) {
                bool interior = false;
                for (std::size_t g = 0; g < m; ++g)
                    if (k[g] != 0 && k[g] != pop[live[g].index].units) interior = true;
                if (interior) consider(true);
                std::size_t g = 0;
                while (g < m && k[g] == pop[live[g].index].units) k[g++] = 0;
                if (g == m) break;
                ++k[g];
            }
        }
        if (decisions) decisions->insert(decisions->end(), best_rec.begin(), best_rec.end());
        return best;
    }

    const TreeModel& tree_;
    long long Q_;
    std::shared_ptr<const TimeGrid> grid_;
    std::vector<std::shared_ptr<const PathBundle>> noise_;
    std::vector<std::vector<long double>> suffix_prob_;
    std::vector<long long> resolution_;
    std::size_t evaluations_ = 0;
};

}  // namespace

double dp_work_estimate(const TreeModel& tree, bool randomized) {
    const double Q = randomized ? static_cast<double>(tree.u_levels()) : 1.0;
    const double kw = static_cast<double>(tree.dW.size()), kb = static_cast<double>(tree.dB.size());
    double log_work = 0.0;
    double groups = static_cast<double>(tree.initial.size());
    for (std::size_t j = 0; j < tree.depth; ++j) {
        const double units = std::pow(Q, static_cast<double>(j + 1));
        log_work += groups * std::log(units + 1.0) + std::log(kb);
        groups *= kw;
    }
    return std::exp(log_work);
}

PureOptimum brute_force_pure_value(const TreeModel& tree) {
    tree.validate();
    const double work = dp_work_estimate(tree, false);
    if (work > kWorkLimit)
        throw CapacityExceeded("pure-policy search needs about " + std::to_string(work) + " leaf evaluations");
    TreeDp dp(tree, false);
    std::vector<Decision> decisions;
    PureOptimum out;
    out.value = dp.solve(&decisions);
    out.evaluations = dp.evaluations();
    auto table = std::make_shared<TreeTable>();
    for (const auto& [key, stop] : decisions) (*table)[key] = stop;
    out.table = table;
    out.policy = table_policy(tree, table);
    return out;
}

long double brute_force_randomized_value(const TreeModel& tree) {
    tree.validate();
    if (tree.u_mirrors_future_b) throw InvalidArgument("randomized search needs an independent U");
    const double work = dp_work_estimate(tree, true);
    if (work > kWorkLimit)
        throw CapacityExceeded("randomized-policy search needs about " + std::to_string(work) +
                               " leaf evaluations");
    TreeDp dp(tree, true);
    return dp.solve(nullptr);
}

}  // namespace mfstop
