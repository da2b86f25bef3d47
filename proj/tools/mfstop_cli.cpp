#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mfstop/core/random.hpp"
#include "mfstop/error.hpp"
#include "mfstop/experiments/config.hpp"
#include "mfstop/experiments/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitBlowup = 4;

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool verify = false;
    // verify subcommand
    std::string experiment;
    std::string csv;
    std::optional<std::size_t> row;
};

mfstop::Config load(const Options& o) {
    mfstop::Config c = o.config.empty() ? mfstop::Config{} : mfstop::load_config(o.config);
    if (o.seed) c.seeds = mfstop::seeds_from(*o.seed);
    if (o.threads) {
        if (*o.threads < 1) throw mfstop::ConfigError("--threads must be >= 1");
        c.threads = *o.threads;
    }
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mfstop::InvalidArgument("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int report_verify(const mfstop::VerifyOutcome& v, std::size_t row) {
    std::cout << "verify row " << row << " (cell " << v.cell << ", " << v.rows_checked << " row(s)): "
              << (v.identical ? "bit-identical" : "MISMATCH " + v.detail) << "\n";
    return v.identical ? 0 : 1;
}

int run_named(const std::string& name, const Options& o) {
    const mfstop::Config config = load(o);
    const mfstop::Experiment e = mfstop::make_experiment(name, config);
    const mfstop::Table table = mfstop::run_experiment(e, config.seeds, config.threads);
    const std::filesystem::path path = std::filesystem::path(o.out) / (name + ".csv");
    mfstop::write_csv(table, path);
    std::cout << name << ": " << table.rows.size() << " row(s) -> " << path.string() << "\n";
    if (name == "tree-oracle")
        std::cout << "relative gap over depths: "
                  << (mfstop::gap_trend_nonincreasing(table) ? "non-increasing" : "increases somewhere") << "\n";
    if (o.verify && !table.rows.empty()) {
        const std::size_t row = mfstop::splitmix64(o.seed.value_or(0)) % table.rows.size();
        return report_verify(mfstop::verify_row(e, mfstop::parse_csv(read_file(path.string())), row), row);
    }
    return 0;
}

int run_verify(const Options& o) {
    if (o.experiment.empty() || o.csv.empty()) throw mfstop::ConfigError("verify needs --experiment and --csv");
    const mfstop::Config config = load(o);
    const mfstop::Experiment e = mfstop::make_experiment(o.experiment, config);
    const auto csv = mfstop::parse_csv(read_file(o.csv));
    if (csv.size() < 2) throw mfstop::InvalidArgument("CSV has no data rows");
    const std::size_t row = o.row.value_or(mfstop::splitmix64(o.seed.value_or(0)) % (csv.size() - 1));
    return report_verify(mfstop::verify_row(e, csv, row), row);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field optimal stopping laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "JSON config file");
    app.add_option("--out", o.out, "output directory for CSV files");
    app.add_option("--seed", o.seed, "derive all seeds from this value");
    app.add_option("--threads", o.threads, "worker threads");
    app.add_flag("--verify", o.verify, "re-run one sampled row and compare");

    for (const auto& name : mfstop::experiment_names()) app.add_subcommand(name, "run the " + name + " experiment");
    auto* verify = app.add_subcommand("verify", "re-run a recorded row from its seeds");
    verify->add_option("--experiment", o.experiment, "experiment that produced the CSV")->required();
    verify->add_option("--csv", o.csv, "CSV file to check")->required();
    verify->add_option("--row", o.row, "0-based data row (default: sampled from --seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (verify->parsed()) return run_verify(o);
        for (const auto* sub : app.get_subcommands()) return run_named(sub->get_name(), o);
    } catch (const mfstop::ConfigError& e) {
        std::cerr << "config error";
        if (e.line()) std::cerr << " (line " << e.line() << ")";
        std::cerr << ": " << e.what() << "\n";
        return kExitConfig;
    } catch (const mfstop::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mfstop::CapacityExceeded& e) {
        std::cerr << "capacity exceeded: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const mfstop::NumericalBlowup& e) {
        std::cerr << "numerical blowup at step " << e.step() << ", particle " << e.particle() << ": " << e.what()
                  << "\n";
        return kExitBlowup;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
