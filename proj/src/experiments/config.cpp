#include "mfstop/experiments/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/models/registry.hpp"

namespace mfstop {

namespace {

using nlohmann::json;

std::size_t line_at(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Best-effort line of a nested key: find each quoted key in turn.
std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
    std::size_t pos = 0;
    for (const auto& key : path) {
        const auto found = text.find('"' + key + '"', pos);
        if (found == std::string::npos) return path.size() > 1 ? line_of(text, {path.front()}) : 0;
        pos = found;
    }
    return line_at(text, pos);
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
        std::string where;
        for (const auto& k : path) where += (where.empty() ? "" : ".") + k;
        throw ConfigError(where + ": " + what, line_of(text_, path));
    }

    const json& object(const json& parent, const std::vector<std::string>& path,
                       std::initializer_list<const char*> allowed) const {
        const json& node = path.empty() ? parent : parent.at(path.back());
        if (!node.is_object()) fail(path, "expected an object");
        for (const auto& [key, value] : node.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                auto p = path;
                p.push_back(key);
                fail(p, "unknown key");
            }
        }
        return node;
    }

    template <class T, class Check>
    void read(const json& obj, std::vector<std::string> path, const char* key, T& out, Check check) const {
        if (!obj.contains(key)) return;
        path.emplace_back(key);
        const json& v = obj.at(key);
        if (!check(v)) fail(path, "wrong type");
        try {
            out = v.get<T>();
        } catch (const json::exception& e) {
            fail(path, e.what());
        }
    }

    void size(const json& obj, const std::vector<std::string>& path, const char* key, std::size_t& out) const {
        read(obj, path, key, out, [](const json& v) { return v.is_number_unsigned(); });
    }
    void u64(const json& obj, const std::vector<std::string>& path, const char* key, std::uint64_t& out) const {
        read(obj, path, key, out, [](const json& v) { return v.is_number_unsigned(); });
    }
    void number(const json& obj, const std::vector<std::string>& path, const char* key, double& out) const {
        read(obj, path, key, out, [](const json& v) { return v.is_number(); });
        if (obj.contains(key) && !std::isfinite(out)) fail(extend(path, key), "must be finite");
    }
    void string(const json& obj, const std::vector<std::string>& path, const char* key, std::string& out) const {
        read(obj, path, key, out, [](const json& v) { return v.is_string(); });
    }
    void numbers(const json& obj, const std::vector<std::string>& path, const char* key,
                 std::vector<double>& out) const {
        read(obj, path, key, out, [](const json& v) {
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
        });
    }
    void sizes(const json& obj, const std::vector<std::string>& path, const char* key,
               std::vector<std::size_t>& out) const {
        read(obj, path, key, out, [](const json& v) {
            return v.is_array() &&
                   std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_unsigned(); });
        });
    }

    static std::vector<std::string> extend(std::vector<std::string> path, const std::string& key) {
        path.push_back(key);
        return path;
    }

private:
    const std::string& text_;
};

void validate(const Config& c, const Reader& r) {
    try {
        make_model(c.model, c.overrides);
    } catch (const Error& e) {
        r.fail({"model"}, e.what());
    }
    if (!(c.T > 0.0)) r.fail({"grid", "T"}, "must be positive");
    if (c.K < 1) r.fail({"grid", "K"}, "must be >= 1");
    if (c.threads < 1) r.fail({"threads"}, "must be >= 1");
    try {
        make_policy(c.policy);
    } catch (const Error& e) {
        r.fail({"policy"}, e.what());
    }
    if (c.policy.kind == "at_step" && c.policy.step > c.K) r.fail({"policy", "step"}, "beyond the grid");
    const auto& e = c.experiment;
    if (std::ranges::any_of(e.N, [](std::size_t n) { return n == 0; })) r.fail({"experiment", "N"}, "must be >= 1");
    if (e.particles < 1) r.fail({"experiment", "particles"}, "must be >= 1");
    if (e.M_ref < 1) r.fail({"experiment", "M_ref"}, "must be >= 1");
    if (e.R < 1) r.fail({"experiment", "R"}, "must be >= 1");
    if (!(e.p >= 1.0)) r.fail({"experiment", "p"}, "must be >= 1");
    if (e.projections < 1) r.fail({"experiment", "projections"}, "must be >= 1");
    if (e.replications < 2) r.fail({"experiment", "replications"}, "must be >= 2");
    if (e.budget < 1) r.fail({"experiment", "budget"}, "must be >= 1");
    try {
        parse_search_method(e.method);
    } catch (const Error& err) {
        r.fail({"experiment", "method"}, err.what());
    }
    try {
        make_family(e);
    } catch (const Error& err) {
        r.fail({"experiment", "family"}, err.what());
    }
    if (std::ranges::any_of(e.depths, [](std::size_t d) { return d == 0; }))
        r.fail({"experiment", "depths"}, "must be >= 1");
}

}  // namespace

Config parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), line_at(text, e.byte == 0 ? 0 : e.byte - 1));
    }
    const Reader r(text);
    Config c;
    r.object(root, {}, {"model", "grid", "policy", "seeds", "experiment", "threads"});

    if (root.contains("model")) {
        const json& m = r.object(root, {"model"}, {"id", "overrides"});
        r.string(m, {"model"}, "id", c.model);
        if (m.contains("overrides")) {
            const json& o = m.at("overrides");
            if (!o.is_object()) r.fail({"model", "overrides"}, "expected an object");
            for (const auto& [k, v] : o.items()) {
                if (!v.is_number()) r.fail({"model", "overrides", k}, "expected a number");
                c.overrides[k] = v.get<double>();
            }
        }
    }
    if (root.contains("grid")) {
        const json& g = r.object(root, {"grid"}, {"T", "K"});
        r.number(g, {"grid"}, "T", c.T);
        r.size(g, {"grid"}, "K", c.K);
    }
    if (root.contains("policy")) {
        const std::vector<std::string> p{"policy"};
        const json& g = r.object(root, p, {"kind", "feature", "params", "step", "probability", "seed"});
        r.string(g, p, "kind", c.policy.kind);
        r.string(g, p, "feature", c.policy.feature);
        r.numbers(g, p, "params", c.policy.params);
        r.size(g, p, "step", c.policy.step);
        r.number(g, p, "probability", c.policy.probability);
        r.u64(g, p, "seed", c.policy.seed);
    }
    if (root.contains("seeds")) {
        const json& s = r.object(root, {"seeds"}, {"common", "idio", "policy"});
        r.u64(s, {"seeds"}, "common", c.seeds.common);
        r.u64(s, {"seeds"}, "idio", c.seeds.idio);
        r.u64(s, {"seeds"}, "policy", c.seeds.policy);
    }
    if (root.contains("threads")) {
        if (!root.at("threads").is_number_integer()) r.fail({"threads"}, "wrong type");
        c.threads = root.at("threads").get<int>();
    }
    if (root.contains("experiment")) {
        const std::vector<std::string> p{"experiment"};
        const json& e = r.object(root, p,
                                 {"N", "particles", "M_ref", "R", "p", "projections", "replications", "family",
                                  "budget", "method", "depths", "q_levels"});
        auto& x = c.experiment;
        r.sizes(e, p, "N", x.N);
        r.size(e, p, "particles", x.particles);
        r.size(e, p, "M_ref", x.M_ref);
        r.size(e, p, "R", x.R);
        r.number(e, p, "p", x.p);
        r.size(e, p, "projections", x.projections);
        r.size(e, p, "replications", x.replications);
        r.size(e, p, "budget", x.budget);
        r.string(e, p, "method", x.method);
        r.sizes(e, p, "depths", x.depths);
        r.size(e, p, "q_levels", x.q_levels);
        if (e.contains("family")) {
            const std::vector<std::string> f{"experiment", "family"};
            const json& fam = r.object(root.at("experiment"), f, {"feature", "lower", "upper"});
            r.string(fam, f, "feature", x.family_feature);
            r.numbers(fam, f, "lower", x.family_lower);
            r.numbers(fam, f, "upper", x.family_upper);
        }
    }
    validate(c, r);
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
    json root;
    root["model"] = {{"id", c.model}, {"overrides", json::object()}};
    for (const auto& [k, v] : c.overrides) root["model"]["overrides"][k] = v;
    root["grid"] = {{"T", c.T}, {"K", c.K}};
    root["policy"] = {{"kind", c.policy.kind},
                      {"feature", c.policy.feature},
                      {"params", c.policy.params},
                      {"step", c.policy.step},
                      {"probability", c.policy.probability},
                      {"seed", c.policy.seed}};
    root["seeds"] = {{"common", c.seeds.common}, {"idio", c.seeds.idio}, {"policy", c.seeds.policy}};
    root["threads"] = c.threads;
    const auto& e = c.experiment;
    root["experiment"] = {{"N", e.N},
                          {"particles", e.particles},
                          {"M_ref", e.M_ref},
                          {"R", e.R},
                          {"p", e.p},
                          {"projections", e.projections},
                          {"replications", e.replications},
                          {"family", {{"feature", e.family_feature}, {"lower", e.family_lower}, {"upper", e.family_upper}}},
                          {"budget", e.budget},
                          {"method", e.method},
                          {"depths", e.depths},
                          {"q_levels", e.q_levels}};
    return root.dump(2) + "\n";
}

Seeds seeds_from(std::uint64_t seed) {
    Seeds s;
    s.common = splitmix64(seed ^ 0x1);
    s.idio = splitmix64(seed ^ 0x2);
    s.policy = splitmix64(seed ^ 0x3);
    return s;
}

StoppingPolicy make_policy(const PolicyConfig& p) {
    if (p.kind == "never") return StoppingPolicy::never();
    if (p.kind == "immediately") return StoppingPolicy::immediately();
    if (p.kind == "at_step") return StoppingPolicy::at_step(p.step);
    if (p.kind == "threshold") return threshold_policy(p.feature, p.params);
    if (p.kind == "randomized") {
        if (!(p.probability >= 0.0 && p.probability <= 1.0))
            throw InvalidArgument("stop probability must be in [0, 1]");
        const double q = p.probability;
        return StoppingPolicy(RandomizedRule{[q](const PolicyQuery&) { return q; }, p.seed});
    }
    throw InvalidArgument("unknown policy kind '" + p.kind + "'");
}

PolicyFamily make_family(const ExperimentConfig& e) {
    PolicyFamily f{e.family_feature, e.family_lower, e.family_upper};
    f.validate();
    threshold_policy(f.feature, f.lower);  // checks the parameter count
    return f;
}

}  // namespace mfstop
