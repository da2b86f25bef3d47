#include "mfstop/experiments/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mfstop/core/parallel.hpp"
#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/models/registry.hpp"
#include "mfstop/optimize/search.hpp"
#include "mfstop/oracle/tree.hpp"
#include "mfstop/transport/wasserstein.hpp"

namespace mfstop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kSeedColumns = {"seed_common", "seed_idio", "seed_policy"};

std::vector<std::string> with_seeds(std::vector<std::string> header) {
    header.insert(header.end(), kSeedColumns.begin(), kSeedColumns.end());
    return header;
}

void push_seeds(Row& row, const Seeds& s) {
    row.emplace_back(s.common);
    row.emplace_back(s.idio);
    row.emplace_back(s.policy);
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out += (out.empty() ? "" : ";") + std::string(buf);
    }
    return out;
}

std::shared_ptr<const TimeGrid> grid_of(const Config& c) {
    return std::make_shared<const TimeGrid>(make_grid(c.T, static_cast<long long>(c.K)));
}

SearchOptions search_options(const Config& c) {
    SearchOptions o;
    o.method = parse_search_method(c.experiment.method);
    o.budget = c.experiment.budget;
    o.replications = c.experiment.replications;
    o.threads = 1;
    return o;
}

Experiment simulate_experiment(const Config& c) {
    Experiment e;
    e.name = "simulate";
    e.header = with_seeds({"cell", "particle", "stop_index", "stop_time", "x_T", "objective", "replication"});
    e.cells = 1;
    e.run_cell = [c](std::size_t, const Seeds& seeds) {
        const BundledModel m = make_model(c.model, c.overrides);
        const auto traj = simulate_system(m.spec, c.experiment.particles, grid_of(c), make_policy(c.policy),
                                          m.initial, seeds);
        const double objective = evaluate_objective(traj, m.spec);
        const std::size_t K = traj.grid->steps();
        std::vector<Row> rows;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            Row r{std::uint64_t{0},
                  std::uint64_t{i},
                  std::uint64_t{traj.particles[i].stop_index},
                  traj.stop_time(i),
                  (*traj.particles[i].state)(K, 0),
                  objective,
                  std::uint64_t{0}};
            push_seeds(r, seeds);
            rows.push_back(std::move(r));
        }
        return rows;
    };
    return e;
}

// N reference atoms drawn without replacement.
EmpiricalMeasure subsample(const EmpiricalMeasure& mu, std::size_t n, std::uint64_t seed, std::uint64_t rep) {
    std::vector<std::size_t> idx(mu.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const CounterRng rng(seed, Stream::Subsample);
    for (std::size_t k = 0; k < n; ++k) {
        const auto span = static_cast<double>(idx.size() - k);
        const std::size_t pick = k + std::min(idx.size() - k - 1, static_cast<std::size_t>(rng.uniform({rep, k, 0, 0}) * span));
        std::swap(idx[k], idx[pick]);
    }
    std::vector<StoppedTriple> atoms;
    for (std::size_t k = 0; k < n; ++k) atoms.push_back(mu.atom(idx[k]));
    return EmpiricalMeasure::uniform(mu.grid_ptr(), std::move(atoms), mu.time_index());
}

Experiment chaos_experiment(const Config& c) {
    Experiment e;
    e.name = "chaos";
    e.header = with_seeds({"cell", "N", "replication", "W_p", "estimator", "exact_subsample", "M_ref", "p"});
    e.cells = c.experiment.N.size() * c.experiment.R;
    e.run_cell = [c](std::size_t cell, const Seeds& seeds) {
        const auto& x = c.experiment;
        const std::size_t N = x.N[cell / x.R];
        const std::uint64_t rep = cell % x.R;
        const BundledModel m = make_model(c.model, c.overrides);
        const auto grid = grid_of(c);
        const StoppingPolicy policy = make_policy(c.policy);
        SimulationOptions opt;
        opt.replication = rep;
        // Same replication index: same B and the same idiosyncratic streams
        // for the first N particles of the reference.
        const auto sys = simulate_system(m.spec, N, grid, policy, m.initial, seeds, opt);
        const auto ref = simulate_system(m.spec, x.M_ref, grid, policy, m.initial, seeds, opt);
        const std::size_t K = grid->steps();
        const EmpiricalMeasure mu = empirical_measure_at(sys, K);
        const EmpiricalMeasure nu = empirical_measure_at(ref, K);

        double w = kNaN, sub = kNaN;
        std::string estimator;
        if (exact_method(mu, nu) != ExactMethod::MinCostFlow) {
            w = wasserstein_exact(mu, nu, x.p);
            estimator = "exact";
        } else {
            w = wasserstein_sliced(mu, nu, x.p, x.projections, splitmix64(seeds.common + rep));
            estimator = "sliced";
            if (N <= x.M_ref && N <= kExactTransportCapacity)
                sub = wasserstein_exact(mu, subsample(nu, N, seeds.idio, rep), x.p);
        }
        Row r{std::uint64_t{cell}, std::uint64_t{N}, rep, w, estimator, sub, std::uint64_t{x.M_ref}, x.p};
        push_seeds(r, seeds);
        return std::vector<Row>{std::move(r)};
    };
    return e;
}

Experiment value_sweep_experiment(const Config& c) {
    Experiment e;
    e.name = "value-sweep";
    e.header = with_seeds({"cell", "kind", "N", "params", "value", "std_error", "replications"});
    e.cells = c.experiment.N.size() + 1;
    e.run_cell = [c](std::size_t cell, const Seeds& seeds) {
        const auto& x = c.experiment;
        const BundledModel m = make_model(c.model, c.overrides);
        const bool limit = cell == x.N.size();
        // The limit row is J at resolution M_ref, i.e. limit_value, searched
        // over the same lattice.
        const std::size_t N = limit ? x.M_ref : x.N[cell];
        const SearchResult s = optimize_policy(m.spec, m.initial, make_family(x), N, grid_of(c), seeds, search_options(c));
        Row r{std::uint64_t{cell},       std::string(limit ? "limit" : "N-player"), std::uint64_t{N},
              join(s.params),           s.value.mean,
              s.value.std_error,        std::uint64_t{s.value.replications}};
        push_seeds(r, seeds);
        return std::vector<Row>{std::move(r)};
    };
    return e;
}

Experiment tree_experiment(const Config& c) {
    if (c.model != "tree_mf_small") throw InvalidArgument("tree-oracle runs on the tree_mf_small model");
    Experiment e;
    e.name = "tree-oracle";
    e.header = with_seeds({"cell", "depth", "q_levels", "scenarios", "pure", "randomized", "gap", "relative_gap"});
    e.cells = c.experiment.depths.size();
    e.run_cell = [c](std::size_t cell, const Seeds& seeds) {
        const std::size_t depth = c.experiment.depths[cell];
        const TreeModel tree = make_tree_model(c.overrides, depth, c.experiment.q_levels);
        const long double pure = brute_force_pure_value(tree).value;
        const long double randomized = brute_force_randomized_value(tree);
        const long double gap = randomized - pure;
        const double relative = pure == 0.0L ? (gap == 0.0L ? 0.0 : kNaN) : static_cast<double>(gap / std::fabs(pure));
        Row r{std::uint64_t{cell},
              std::uint64_t{depth},
              std::uint64_t{c.experiment.q_levels},
              scenario_count(tree),
              static_cast<double>(pure),
              static_cast<double>(randomized),
              static_cast<double>(gap),
              relative};
        push_seeds(r, seeds);
        return std::vector<Row>{std::move(r)};
    };
    return e;
}

Experiment optimize_experiment(const Config& c) {
    Experiment e;
    e.name = "optimize";
    e.header = with_seeds({"cell", "method", "N", "params", "value", "std_error", "evaluations"});
    e.cells = 1;
    e.run_cell = [c](std::size_t, const Seeds& seeds) {
        const BundledModel m = make_model(c.model, c.overrides);
        const SearchResult s = optimize_policy(m.spec, m.initial, make_family(c.experiment), c.experiment.particles,
                                               grid_of(c), seeds, search_options(c));
        Row r{std::uint64_t{0},  c.experiment.method,   std::uint64_t{c.experiment.particles},
              join(s.params),     s.value.mean,          s.value.std_error,
              std::uint64_t{s.trace.size()}};
        push_seeds(r, seeds);
        return std::vector<Row>{std::move(r)};
    };
    return e;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("row has a malformed ") + what + " field '" + s + "'");
}

}  // namespace

std::vector<std::string> experiment_names() { return {"simulate", "chaos", "value-sweep", "tree-oracle", "optimize"}; }

Experiment make_experiment(const std::string& name, const Config& config) {
    if (name == "simulate") return simulate_experiment(config);
    if (name == "chaos") return chaos_experiment(config);
    if (name == "value-sweep") return value_sweep_experiment(config);
    if (name == "tree-oracle") return tree_experiment(config);
    if (name == "optimize") return optimize_experiment(config);
    throw InvalidArgument("unknown experiment '" + name + "'");
}

Table run_experiment(const Experiment& experiment, const Seeds& seeds, int threads) {
    std::vector<std::vector<Row>> per_cell(experiment.cells);
    parallel_for(experiment.cells, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) per_cell[c] = experiment.run_cell(c, seeds);
    });
    Table t;
    t.header = experiment.header;
    for (auto& rows : per_cell)
        for (auto& r : rows) t.rows.push_back(std::move(r));
    return t;
}

Table run_simulate(const Config& c) { return run_experiment(make_experiment("simulate", c), c.seeds, c.threads); }
Table run_chaos_experiment(const Config& c) { return run_experiment(make_experiment("chaos", c), c.seeds, c.threads); }
Table run_value_sweep(const Config& c) { return run_experiment(make_experiment("value-sweep", c), c.seeds, c.threads); }
Table run_equivalence_check(const Config& c) {
    return run_experiment(make_experiment("tree-oracle", c), c.seeds, c.threads);
}
Table run_optimize(const Config& c) { return run_experiment(make_experiment("optimize", c), c.seeds, c.threads); }

VerifyOutcome verify_row(const Experiment& experiment, const std::vector<std::vector<std::string>>& csv,
                         std::size_t row) {
    if (csv.empty() || csv.front() != experiment.header)
        throw InvalidArgument("CSV header does not match the '" + experiment.name + "' experiment");
    if (row + 1 >= csv.size()) throw InvalidArgument("row " + std::to_string(row) + " is out of range");
    const auto& rec = csv[row + 1];
    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::ranges::find(experiment.header, name) - experiment.header.begin());
    };
    VerifyOutcome out;
    out.cell = parse_u64(rec.at(0), "cell");
    if (out.cell >= experiment.cells) throw InvalidArgument("row refers to a cell outside this configuration");
    Seeds seeds;
    seeds.common = parse_u64(rec.at(col("seed_common")), "seed_common");
    seeds.idio = parse_u64(rec.at(col("seed_idio")), "seed_idio");
    seeds.policy = parse_u64(rec.at(col("seed_policy")), "seed_policy");

    std::vector<const std::vector<std::string>*> recorded;
    for (std::size_t k = 1; k < csv.size(); ++k)
        if (!csv[k].empty() && csv[k][0] == rec[0]) recorded.push_back(&csv[k]);
    const std::vector<Row> fresh = experiment.run_cell(out.cell, seeds);
    out.identical = fresh.size() == recorded.size();
    if (!out.identical) out.detail = "cell produced a different number of rows";
    for (std::size_t k = 0; out.identical && k < fresh.size(); ++k) {
        for (std::size_t f = 0; f < fresh[k].size(); ++f) {
            const std::string now = format_cell(fresh[k][f]);
            if (f >= recorded[k]->size() || (*recorded[k])[f] != now) {
                out.identical = false;
                out.detail = "column '" + experiment.header[f] + "': recorded " +
                             (f < recorded[k]->size() ? (*recorded[k])[f] : std::string("<missing>")) +
                             ", re-run " + now;
                break;
            }
        }
        ++out.rows_checked;
    }
    return out;
}

bool gap_trend_nonincreasing(const Table& table) {
    const std::size_t k = table.column("relative_gap");
    for (std::size_t r = 1; r < table.rows.size(); ++r)
        if (std::get<double>(table.rows[r][k]) > std::get<double>(table.rows[r - 1][k])) return false;
    return true;
}

}  // namespace mfstop
