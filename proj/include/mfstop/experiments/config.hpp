#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mfstop/optimize/search.hpp"
#include "mfstop/policies/policy.hpp"
#include "mfstop/sde/simulate.hpp"

namespace mfstop {

struct PolicyConfig {
    std::string kind = "never";  // never | immediately | at_step | threshold | randomized
    std::string feature;         // threshold
    std::vector<double> params;  // threshold
    std::size_t step = 0;        // at_step
    double probability = 0.5;    // randomized: constant stop probability per step
    std::uint64_t seed = 0;      // randomized

    bool operator==(const PolicyConfig&) const = default;
};

struct ExperimentConfig {
    std::vector<std::size_t> N = {8, 32, 128, 512};
    std::size_t particles = 64;       // simulate / optimize
    std::size_t M_ref = 2048;
    std::size_t R = 20;
    double p = 2.0;
    std::size_t projections = 64;     // sliced estimator
    std::size_t replications = 16;    // value estimates
    std::string family_feature = "state_above";
    std::vector<double> family_lower = {-1.0};
    std::vector<double> family_upper = {1.0};
    std::size_t budget = 9;
    std::string method = "grid";
    std::vector<std::size_t> depths = {1, 2, 3};
    std::size_t q_levels = 2;

    bool operator==(const ExperimentConfig&) const = default;
};

struct Config {
    std::string model = "ou_meanfield";
    std::map<std::string, double> overrides;
    double T = 1.0;
    std::size_t K = 20;
    PolicyConfig policy;
    Seeds seeds;
    ExperimentConfig experiment;
    int threads = 1;

    bool operator==(const Config&) const = default;
};

// Strict: unknown keys and wrong types are ConfigErrors carrying the line of
// the offending key when it can be found.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string serialize_config(const Config& config);

// Seeds derived from a single --seed value.
Seeds seeds_from(std::uint64_t seed);

StoppingPolicy make_policy(const PolicyConfig& policy);
PolicyFamily make_family(const ExperimentConfig& experiment);

}  // namespace mfstop
