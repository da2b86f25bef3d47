#include "mfstop/models/registry.hpp"

#include <algorithm>
#include <cmath>

#include "mfstop/error.hpp"

namespace mfstop {

namespace {

double clamp_abs(double v, double cap) { return std::clamp(v, -cap, cap); }

auto scalar(double v) {
    return [v](double, const PathView&, const EmpiricalMeasure&, std::vector<double>& out) { out.assign(1, v); };
}

std::map<std::string, double> merged(const std::string& id, const std::map<std::string, double>& overrides) {
    auto p = default_params(id);
    for (const auto& [k, v] : overrides) {
        const auto it = p.find(k);
        if (it == p.end()) throw InvalidArgument("model '" + id + "' has no parameter '" + k + "'");
        if (!std::isfinite(v)) throw InvalidArgument("parameter '" + k + "' must be finite");
        it->second = v;
    }
    return p;
}

BundledModel ou_meanfield(const std::map<std::string, double>& p) {
    const double theta = p.at("theta"), kappa = p.at("kappa"), s = p.at("s"), s0 = p.at("s0");
    const double rho = p.at("rho"), lambda = p.at("lambda"), cap = p.at("cap");
    if (s < 0.0 || s0 < 0.0 || cap <= 0.0) throw InvalidArgument("ou_meanfield: s, s0 >= 0 and cap > 0 required");
    BundledModel m;
    m.params = p;
    ModelSpec& spec = m.spec;
    spec.id = "ou_meanfield";
    spec.n = spec.d = spec.l = 1;
    spec.drift = [theta, kappa](double, const PathView& x, const EmpiricalMeasure& mu, std::vector<double>& out) {
        const double xt = x.current();
        out.assign(1, -theta * xt + kappa * (mu.state_mean()[0] - xt));
    };
    spec.diffusion = scalar(s);
    spec.common_diffusion = scalar(s0);
    spec.running_reward = [rho, cap](double, const PathView& x, const EmpiricalMeasure& mu) {
        const double dev = x.current() - mu.state_mean()[0];
        return -rho * std::min(dev * dev, cap);
    };
    spec.terminal_reward = [lambda, cap](double, const PathView& x, const EmpiricalMeasure& mu) {
        return clamp_abs(x.current(), cap) - lambda * clamp_abs(mu.state_mean()[0], cap);
    };
    spec.lipschitz = theta + 2.0 * kappa + 1.0;
    spec.reward_bound = std::max(rho * cap, cap * (1.0 + std::abs(lambda)));
    m.initial = InitialLaw::gaussian({p.at("x0")}, {p.at("sd")});
    return m;
}

BundledModel brownian_plain(const std::map<std::string, double>& p) {
    const double mu_drift = p.at("mu"), s = p.at("s"), cap = p.at("cap");
    BundledModel m;
    m.params = p;
    ModelSpec& spec = m.spec;
    spec.id = "brownian_plain";
    spec.n = spec.d = 1;
    spec.l = 0;
    spec.drift = scalar(mu_drift);
    spec.diffusion = scalar(s);
    spec.running_reward = [](double, const PathView&, const EmpiricalMeasure&) { return 0.0; };
    spec.terminal_reward = [cap](double, const PathView& x, const EmpiricalMeasure&) {
        return clamp_abs(x.current(), cap);
    };
    spec.lipschitz = 1.0;
    spec.reward_bound = cap;
    m.initial = InitialLaw::point({p.at("x0")});
    return m;
}

BundledModel tree_mf_small(const std::map<std::string, double>& p) {
    const double kappa = p.at("kappa"), s0 = p.at("s0"), a = p.at("a"), c = p.at("c");
    const double bandwidth = p.at("h") * p.at("T");
    if (!(bandwidth > 0.0)) throw InvalidArgument("tree_mf_small: h must be positive");
    BundledModel m;
    m.params = p;
    ModelSpec& spec = m.spec;
    spec.id = "tree_mf_small";
    spec.n = spec.d = spec.l = 1;
    spec.drift = [kappa](double, const PathView& x, const EmpiricalMeasure& mu, std::vector<double>& out) {
        out.assign(1, kappa * (mu.state_mean()[0] - x.current()));
    };
    spec.diffusion = scalar(1.0);
    spec.common_diffusion = scalar(s0);
    spec.running_reward = [](double, const PathView&, const EmpiricalMeasure&) { return 0.0; };
    spec.terminal_reward = [a, c, bandwidth](double tau, const PathView& x, const EmpiricalMeasure& mu) {
        double crowd = 0.0;
        if (c != 0.0)
            for (std::size_t i = 0; i < mu.size(); ++i)
                crowd += mu.weight(i) * std::max(0.0, 1.0 - std::abs(mu.atom(i).stop_time - tau) / bandwidth);
        return 1.0 + a * std::tanh(x.current()) - c * crowd;
    };
    spec.lipschitz = 1.0 + kappa;
    spec.reward_bound = 1.0 + std::abs(a) + std::abs(c);
    m.initial = InitialLaw::point({p.at("x0")});
    return m;
}

}  // namespace

std::vector<std::string> registry_ids() { return {"ou_meanfield", "brownian_plain", "tree_mf_small"}; }

std::map<std::string, double> default_params(const std::string& id) {
    if (id == "ou_meanfield")
        return {{"theta", 1.0}, {"kappa", 1.0}, {"s", 0.5},   {"s0", 0.3}, {"x0", 0.0},
                {"sd", 0.5},    {"rho", 0.5},   {"lambda", 0.2}, {"cap", 4.0}};
    if (id == "brownian_plain") return {{"mu", 0.0}, {"s", 1.0}, {"x0", 0.0}, {"cap", 1e3}};
    if (id == "tree_mf_small")
        return {{"kappa", 0.5}, {"s0", 0.5}, {"x0", 0.0}, {"a", 0.5}, {"c", 0.5}, {"h", 0.5}, {"T", 1.0}};
    throw InvalidArgument("unknown model id '" + id + "'");
}

BundledModel make_model(const std::string& id, const std::map<std::string, double>& overrides) {
    const auto p = merged(id, overrides);
    if (id == "ou_meanfield") return ou_meanfield(p);
    if (id == "brownian_plain") return brownian_plain(p);
    return tree_mf_small(p);
}

TreeModel make_tree_model(const std::map<std::string, double>& overrides, std::size_t depth, std::size_t q_levels) {
    const BundledModel m = make_model("tree_mf_small", overrides);
    return binary_tree(m.spec, depth, m.params.at("T"), DiscreteLaw::point(m.params.at("x0")), q_levels);
}

}  // namespace mfstop
