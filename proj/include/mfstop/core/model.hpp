#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfstop/core/measure.hpp"
#include "mfstop/core/path_bundle.hpp"

namespace mfstop {

// Coefficients write into `out`, which the caller sizes; implementations
// assign the full result (resize + fill) so shapes can be checked after every
// call. Matrices are row-major: sigma is n×d, sigma0 is n×ℓ.
using VectorCoefficient =
    std::function<void(double t, const PathView& state, const EmpiricalMeasure& m, std::vector<double>& out)>;
using RunningReward = std::function<double(double t, const PathView& state, const EmpiricalMeasure& m)>;
// g(τ, x, μ_T): `state` is the whole path frozen at τ.
using TerminalReward = std::function<double(double stop_time, const PathView& state, const EmpiricalMeasure& m)>;

struct ModelSpec {
    std::string id;
    std::size_t n = 1;
    std::size_t d = 1;
    std::size_t l = 1;
    VectorCoefficient drift;
    VectorCoefficient diffusion;
    VectorCoefficient common_diffusion;
    RunningReward running_reward;
    TerminalReward terminal_reward;
    double lipschitz = 1.0;
    double moment_p = 2.0;
    // Declared bound on |f| and |g|.
    double reward_bound = 1.0;
};

// Draws X_0 for one particle from the given uniforms/normals source.
class InitialLaw {
public:
    static InitialLaw point(std::vector<double> value);
    static InitialLaw gaussian(std::vector<double> mean, std::vector<double> stddev);
    static InitialLaw discrete(std::vector<std::vector<double>> points, std::vector<double> probabilities);

    std::size_t dim() const noexcept { return dim_; }
    // `uniform01` and `normal01` are the particle's private draws for coordinate k.
    void sample(const std::function<double(std::size_t)>& uniform01, const std::function<double(std::size_t)>& normal01,
                std::span<double> out) const;
    bool deterministic() const noexcept { return kind_ == Kind::Point; }
    std::vector<double> mean() const;

private:
    enum class Kind { Point, Gaussian, Discrete };
    Kind kind_ = Kind::Point;
    std::size_t dim_ = 0;
    std::vector<double> a_;
    std::vector<double> b_;
    std::vector<std::vector<double>> points_;
    std::vector<double> cumulative_;
};

void check_model_dimensions(const ModelSpec& model);

struct ShapeCheckReport {
    std::size_t samples = 0;
    double max_abs_reward = 0.0;
};

// Evaluates b, σ, σ0, f, g on `samples` random inputs on the grid and throws
// ContractViolation when an output has the wrong shape, is non-finite, or a
// reward exceeds the declared bound.
ShapeCheckReport check_model_shapes(const ModelSpec& model, const TimeGrid& grid, std::size_t samples,
                                    std::uint64_t seed);

}  // namespace mfstop
