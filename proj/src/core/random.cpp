#include "mfstop/core/random.hpp"

#include <cmath>
#include <numbers>

namespace mfstop {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<std::uint32_t, 4> CounterRng::raw(const DrawIndex& at) const {
    // The 64-bit indices are folded to 32 bits per counter word; indices
    // beyond 2^32 are not used by the library.
    return philox4x32({static_cast<std::uint32_t>(at.coord), static_cast<std::uint32_t>(at.step),
                       static_cast<std::uint32_t>(at.particle), static_cast<std::uint32_t>(at.replication)},
                      key_);
}

double CounterRng::uniform(const DrawIndex& at) const {
    const auto r = raw(at);
    return to_open_unit(r[0], r[1]);
}

double CounterRng::normal(const DrawIndex& at) const {
    const auto r = raw(at);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::sign(const DrawIndex& at) const { return (raw(at)[0] & 1u) ? 1.0 : -1.0; }

}  // namespace mfstop
