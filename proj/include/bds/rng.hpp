#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace bds {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Private random stream of one path/replica, derived deterministically from
/// (seed, path index). The uniform and normal mappings are spelled out here
/// so identical seeds give bit-identical streams regardless of scheduling.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path) {
        std::uint64_t s = seed ^ (0xd1342543de82ef95ull * (path + 1));
        const std::uint64_t lo = splitmix64(s);
        const std::uint64_t hi = splitmix64(s);
        eng_.seed(lo ^ (hi << 1));
    }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace bds
