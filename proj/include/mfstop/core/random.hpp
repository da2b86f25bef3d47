#pragma once

#include <array>
#include <cstdint>

namespace mfstop {

// Counter-based generator (Philox4x32-10). Every draw is a pure function of
// (seed, stream, replication, particle, step, coordinate), so results never
// depend on how work is split across threads.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

enum class Stream : std::uint32_t {
    Initial = 1,
    Idiosyncratic = 2,
    Common = 3,
    Policy = 4,
    Projection = 5,
    Search = 6,
    Subsample = 7,
};

struct DrawIndex {
    std::uint64_t replication = 0;
    std::uint64_t particle = 0;
    std::uint64_t step = 0;
    std::uint64_t coord = 0;
};

class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream);

    std::array<std::uint32_t, 4> raw(const DrawIndex& at) const;
    // Uniform on the open interval (0, 1).
    double uniform(const DrawIndex& at) const;
    double normal(const DrawIndex& at) const;
    // ±1 with probability 1/2 each.
    double sign(const DrawIndex& at) const;

private:
    std::array<std::uint32_t, 2> key_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mfstop
