#include "mfstop/oracle/tree.hpp"

#include <boost/rational.hpp>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "mfstop/error.hpp"
#include "mfstop/models/registry.hpp"
#include "tree_internal.hpp"

namespace mfstop {

DiscreteLaw DiscreteLaw::point(double value) { return {{value}, {Rational(1)}}; }

DiscreteLaw DiscreteLaw::coin(double a) { return {{a, -a}, {Rational(1, 2), Rational(1, 2)}}; }

DiscreteLaw DiscreteLaw::uniform(std::vector<double> values) {
    const auto k = static_cast<long long>(values.size());
    return {std::move(values), std::vector<Rational>(static_cast<std::size_t>(k), Rational(1, k == 0 ? 1 : k))};
}

void DiscreteLaw::validate(const char* what) const {
    if (values.empty() || values.size() != probabilities.size())
        throw InvalidArgument(std::string(what) + ": need one probability per support point");
    Rational total(0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw InvalidArgument(std::string(what) + ": support must be finite");
        if (probabilities[i] < Rational(0)) throw InvalidArgument(std::string(what) + ": negative probability");
        total += probabilities[i];
    }
    if (total != Rational(1)) throw InvalidArgument(std::string(what) + ": probabilities must sum to exactly 1");
}

std::shared_ptr<const TimeGrid> TreeModel::grid() const {
    return std::make_shared<const TimeGrid>(TimeGrid::uniform(horizon, depth));
}

void TreeModel::validate() const {
    if (depth < 1 || depth > 4) throw InvalidArgument("tree depth must be in 1..4");
    if (!(horizon > 0.0)) throw InvalidArgument("tree horizon must be positive");
    if (model.n != 1 || model.d != 1 || model.l > 1)
        throw InvalidArgument("tree models are one-dimensional (n = d = 1, l <= 1)");
    check_model_dimensions(model);
    initial.validate("initial law");
    if (initial.size() > 4) throw InvalidArgument("initial law has more than 4 support points");
    dW.validate("W increments");
    dB.validate("B increments");
    if (u_mirrors_future_b && q_levels == 0) throw InvalidArgument("mirrored U needs q_levels > 0");
    const double count = scenario_count(*this);
    if (count > kMaxScenarios) {
        std::ostringstream os;
        os << "tree has " << count << " scenarios, above the limit of " << kMaxScenarios;
        throw CapacityExceeded(os.str());
    }
}

TreeModel binary_tree(ModelSpec model, std::size_t depth, double horizon, DiscreteLaw initial,
                      std::size_t q_levels) {
    TreeModel t;
    t.model = std::move(model);
    t.depth = depth;
    t.horizon = horizon;
    t.initial = std::move(initial);
    const double a = std::sqrt(horizon / static_cast<double>(depth == 0 ? 1 : depth));
    t.dW = DiscreteLaw::coin(a);
    t.dB = DiscreteLaw::coin(a);
    t.q_levels = q_levels;
    return t;
}

double scenario_count(const TreeModel& tree) {
    const double per_step = static_cast<double>(tree.dW.size() * tree.dB.size()) *
                            (tree.u_mirrors_future_b ? 1.0 : static_cast<double>(tree.u_levels()));
    return static_cast<double>(tree.initial.size()) * std::pow(per_step, static_cast<double>(tree.depth));
}

std::uint64_t prefix_code(std::span<const std::size_t> indices, std::size_t base) {
    std::uint64_t code = 0;
    for (std::size_t i : indices) code = code * base + i;
    return code;
}

std::vector<Scenario> enumerate_scenarios(const TreeModel& tree) {
    tree.validate();
    const std::size_t D = tree.depth;
    const std::size_t kw = tree.dW.size(), kb = tree.dB.size();
    const std::size_t Q = tree.u_mirrors_future_b ? 1 : tree.u_levels();
    const Rational q_prob(1, static_cast<long long>(tree.u_levels()));
    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(scenario_count(tree)));

    std::vector<std::size_t> w(D), b(D), u(D);
    auto bump = [](std::vector<std::size_t>& digits, std::size_t base) {
        for (std::size_t k = digits.size(); k-- > 0;) {
            if (++digits[k] < base) return true;
            digits[k] = 0;
        }
        return false;
    };
    for (std::size_t x0 = 0; x0 < tree.initial.size(); ++x0) {
        std::ranges::fill(w, 0);
        do {
            std::ranges::fill(b, 0);
            do {
                std::ranges::fill(u, 0);
                do {
                    Scenario s;
                    s.x0 = x0;
                    s.w = w;
                    s.b = b;
                    s.probability = tree.initial.probabilities[x0];
                    for (std::size_t k = 0; k < D; ++k) s.probability *= tree.dW.probabilities[w[k]];
                    for (std::size_t k = 0; k < D; ++k) s.probability *= tree.dB.probabilities[b[k]];
                    if (tree.u_mirrors_future_b) {
                        s.u.resize(D);
                        for (std::size_t k = 0; k < D; ++k) s.u[k] = b[k] % tree.u_levels();
                    } else {
                        s.u = u;
                        for (std::size_t k = 0; k < D; ++k) s.probability *= q_prob;
                    }
                    out.push_back(std::move(s));
                } while (bump(u, Q));
            } while (bump(b, kb));
        } while (bump(w, kw));
    }
    return out;
}

TreePolicy tree_never() {
    return [](const TreeNode&) -> std::optional<bool> { return false; };
}

TreePolicy tree_stop_at(std::size_t step) {
    return [step](const TreeNode& n) -> std::optional<bool> { return n.step >= step; };
}

TreePolicy table_policy(const TreeModel& tree, std::shared_ptr<const TreeTable> table) {
    const std::size_t kw = tree.dW.size(), kb = tree.dB.size();
    return [table, kw, kb](const TreeNode& n) -> std::optional<bool> {
        const auto it = table->find({n.step, n.x0, prefix_code(n.w, kw), prefix_code(n.b, kb)});
        if (it == table->end()) return std::nullopt;
        return it->second;
    };
}

namespace tree_detail {

std::vector<std::shared_ptr<const PathBundle>> all_noise_paths(const TreeModel& tree) {
    const std::size_t D = tree.depth, kw = tree.dW.size();
    std::size_t total = 1;
    for (std::size_t k = 0; k < D; ++k) total *= kw;
    std::vector<std::shared_ptr<const PathBundle>> out(total);
    for (std::size_t code = 0; code < total; ++code) {
        PathBundle p(D + 1, 1);
        std::size_t rest = code, scale = total;
        for (std::size_t k = 0; k < D; ++k) {
            scale /= kw;
            const std::size_t idx = rest / scale;
            rest %= scale;
            p(k + 1, 0) = p(k, 0) + tree.dW.values[idx];
        }
        out[code] = std::make_shared<const PathBundle>(std::move(p));
    }
    return out;
}

double euler_step(double x, double drift, double sigma, double sigma0, double dt, double dw, double db) {
    return ((x + drift * dt) + sigma * dw) + sigma0 * db;
}

}  // namespace tree_detail

TreeSweep tree_sweep(const TreeModel& tree, const TreePolicy& policy) {
    TreeSweep out;
    out.scenarios = enumerate_scenarios(tree);
    const auto& S = out.scenarios;
    const std::size_t D = tree.depth, kw = tree.dW.size(), kb = tree.dB.size();
    const auto grid = tree.grid();
    const double h = grid->dt(0);
    const auto noise = tree_detail::all_noise_paths(tree);
    const ModelSpec& model = tree.model;

    std::vector<PathBundle> x(S.size(), PathBundle(D + 1, 1));
    out.stop.assign(S.size(), D + 1);
    std::vector<long double> running(S.size(), 0.0L);
    for (std::size_t s = 0; s < S.size(); ++s) x[s](0, 0) = tree.initial.values[S[s].x0];
    out.conditional_weight.assign(D + 1, std::vector<Rational>(S.size()));

    std::vector<double> coef;
    for (std::size_t j = 0; j <= D; ++j) {
        // One measure per B-prefix: conditional law of (X_{t∧·}, W, τ∧t).
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_prefix;
        for (std::size_t s = 0; s < S.size(); ++s) {
            Rational pb(1);
            for (std::size_t k = 0; k < j; ++k) pb *= tree.dB.probabilities[S[s].b[k]];
            out.conditional_weight[j][s] = S[s].probability / pb;
            by_prefix[prefix_code(std::span(S[s].b).first(j), kb)].push_back(s);
        }
        std::unordered_map<std::uint64_t, EmpiricalMeasure> measures;
        for (const auto& [code, members] : by_prefix) {
            std::map<std::tuple<std::size_t, std::uint64_t, std::size_t>, std::pair<std::size_t, Rational>> merged;
            for (std::size_t s : members) {
                const std::size_t cut = std::min(out.stop[s], j);
                auto key = std::make_tuple(S[s].x0, prefix_code(S[s].w, kw), cut);
                auto [it, fresh] = merged.try_emplace(key, s, Rational(0));
                it->second.second += out.conditional_weight[j][s];
            }
            std::vector<StoppedTriple> atoms;
            std::vector<double> weights;
            for (const auto& [key, rep] : merged) {
                const std::size_t cut = std::get<2>(key);
                atoms.push_back(StoppedTriple{std::make_shared<const PathBundle>(x[rep.first]), cut,
                                              noise[std::get<1>(key)], (*grid)[cut]});
                weights.push_back(boost::rational_cast<double>(rep.second));
            }
            measures.emplace(code, EmpiricalMeasure(grid, std::move(atoms), std::move(weights), j));
        }
        if (j == D) {
            for (auto& st : out.stop)
                if (st > D) st = D;
            break;
        }

        const double t = (*grid)[j];
        for (std::size_t s = 0; s < S.size(); ++s) {
            if (out.stop[s] <= D) continue;
            std::vector<double> xs(j + 1);
            for (std::size_t r = 0; r <= j; ++r) xs[r] = x[s](r, 0);
            TreeNode node{j, t, S[s].x0, xs, std::span(S[s].w).first(j), std::span(S[s].b).first(j),
                          std::span(S[s].u).first(j + 1)};
            const auto decision = policy(node);
            if (!decision) throw ContractViolation("tree policy is undefined at step " + std::to_string(j));
            if (*decision) out.stop[s] = j;
        }
        for (std::size_t s = 0; s < S.size(); ++s) {
            if (out.stop[s] <= D) {
                x[s](j + 1, 0) = x[s](j, 0);
                continue;
            }
            const EmpiricalMeasure& mu = measures.at(prefix_code(std::span(S[s].b).first(j), kb));
            const PathView view(x[s], j, j);
            model.drift(t, view, mu, coef);
            const double b = coef.at(0);
            model.diffusion(t, view, mu, coef);
            const double sig = coef.at(0);
            double sig0 = 0.0;
            if (model.l > 0) {
                model.common_diffusion(t, view, mu, coef);
                sig0 = coef.at(0);
            }
            running[s] += static_cast<long double>(model.running_reward(t, view, mu)) * h;
            x[s](j + 1, 0) =
                tree_detail::euler_step(x[s](j, 0), b, sig, sig0, h, tree.dW.values[S[s].w[j]], tree.dB.values[S[s].b[j]]);
        }
    }

    std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_path;
    for (std::size_t s = 0; s < S.size(); ++s) by_path[prefix_code(S[s].b, kb)].push_back(s);
    // μ_T was built last in the loop above; rebuild it per full B path.
    long double value = 0.0L;
    for (const auto& [code, members] : by_path) {
        std::map<std::tuple<std::size_t, std::uint64_t, std::size_t>, std::pair<std::size_t, Rational>> merged;
        for (std::size_t s : members) {
            auto [it, fresh] =
                merged.try_emplace(std::make_tuple(S[s].x0, prefix_code(S[s].w, kw), out.stop[s]), s, Rational(0));
            it->second.second += out.conditional_weight[D][s];
        }
        std::vector<StoppedTriple> atoms;
        std::vector<double> weights;
        for (const auto& [key, rep] : merged) {
            const std::size_t cut = std::get<2>(key);
            atoms.push_back(StoppedTriple{std::make_shared<const PathBundle>(x[rep.first]), cut,
                                          noise[std::get<1>(key)], (*grid)[cut]});
            weights.push_back(boost::rational_cast<double>(rep.second));
        }
        const EmpiricalMeasure mu_T(grid, std::move(atoms), std::move(weights), D);
        for (std::size_t s : members) {
            const double g = model.terminal_reward((*grid)[out.stop[s]], PathView(x[s], D, out.stop[s]), mu_T);
            value += boost::rational_cast<long double>(S[s].probability) * (running[s] + g);
        }
    }
    out.value = value;
    out.x.resize(S.size());
    for (std::size_t s = 0; s < S.size(); ++s) {
        out.x[s].resize(D + 1);
        for (std::size_t r = 0; r <= D; ++r) out.x[s][r] = x[s](r, 0);
    }
    return out;
}

long double tree_value(const TreeModel& tree, const TreePolicy& policy) { return tree_sweep(tree, policy).value; }

std::vector<HViolation> check_h_hypothesis(const TreeModel& tree, const TreePolicy& policy) {
    const TreeSweep sweep = tree_sweep(tree, policy);
    const auto& S = sweep.scenarios;
    const std::size_t D = tree.depth, kw = tree.dW.size(), kb = tree.dB.size();

    auto b_prob = [&](std::uint64_t code, std::size_t len) {
        Rational p(1);
        for (std::size_t k = 0; k < len; ++k) {
            p *= tree.dB.probabilities[code % kb];
            code /= kb;
        }
        return p;
    };

    std::vector<HViolation> violations;
    for (std::size_t j = 0; j <= D; ++j) {
        // D = {X_0, full W, B before t_j, stop index if stopped by t_j}.
        using Key = std::tuple<std::size_t, std::uint64_t, std::uint64_t, long long>;
        std::map<Key, Rational> marginal;
        std::map<std::pair<Key, std::uint64_t>, Rational> joint;
        for (std::size_t s = 0; s < S.size(); ++s) {
            const long long status = sweep.stop[s] <= j ? static_cast<long long>(sweep.stop[s]) : -1;
            const Key key{S[s].x0, prefix_code(S[s].w, kw), prefix_code(std::span(S[s].b).first(j), kb), status};
            marginal[key] += S[s].probability;
            joint[{key, prefix_code(S[s].b, kb)}] += S[s].probability;
        }
        std::size_t extensions = 1;
        for (std::size_t k = j; k < D; ++k) extensions *= kb;
        for (const auto& [key, mass] : marginal) {
            const std::uint64_t prefix = std::get<2>(key);
            const Rational given_past = mass / b_prob(prefix, j);
            for (std::size_t r = 0; r < extensions; ++r) {
                const std::uint64_t full = prefix * extensions + r;
                const Rational pb = b_prob(full, D);
                if (pb == Rational(0)) continue;
                const auto it = joint.find({key, full});
                const Rational given_all = (it == joint.end() ? Rational(0) : it->second) / pb;
                if (given_all != given_past) {
                    std::ostringstream ev, det;
                    ev << "x0=" << std::get<0>(key) << " w=" << std::get<1>(key) << " b<t=" << prefix
                       << " stop=" << std::get<3>(key);
                    det << "P(D|B=" << full << ")=" << given_all << " but P(D|B before t)=" << given_past;
                    violations.push_back({j, ev.str(), det.str()});
                }
            }
        }
    }
    return violations;
}

TreeCounterexample anticipative_counterexample(std::size_t depth) {
    TreeCounterexample out;
    out.tree = make_tree_model({}, depth, 2);
    out.tree.u_mirrors_future_b = true;
    out.policy = [](const TreeNode& n) -> std::optional<bool> { return n.step == 0 && n.u[0] == 0; };
    return out;
}

}  // namespace mfstop
