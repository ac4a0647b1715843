#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace hphi4 {

// Input outside an operation's admissible domain (CLI exit code 2).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical procedure failed to converge or lost integrability (CLI exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream seed for independent work items; collision-free mixing of the lineage.
inline uint64_t derive_stream(uint64_t seed, uint64_t a, uint64_t b) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x9e3779b97f4a7c15ULL));
}

// Deterministic normal sampler (Box-Muller; std::normal_distribution is
// implementation-defined, which would break bit-identical reruns).
class NormalSampler {
  public:
    explicit NormalSampler(uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double m = std::sqrt(-2.0 * std::log(u1));
        spare_ = m * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return m * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    double uniform01() {
        // (0,1]: keeps log() finite
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;
    }
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline std::string version_string() { return "0.1.0"; }

}  // namespace hphi4
