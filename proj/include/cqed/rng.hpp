#pragma once

// Random streams for trajectory ensembles.
//
// Each trajectory owns a std::mt19937_64 seeded with splitmix64(master, index),
// so a trajectory's variates depend only on (master_seed, trajectory_index) and
// never on scheduling.  Uniform variates use the top 53 bits of one engine
// output, which is portable across standard libraries (unlike
// std::uniform_real_distribution).

#include <cstdint>
#include <random>

namespace cqed {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class TrajectoryRng {
public:
    explicit TrajectoryRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

} // namespace cqed
