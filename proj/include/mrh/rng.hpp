#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mrh {

// splitmix64 step; used to derive independent child seeds from a master seed
// so that parallel sweep points stay deterministic regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master + 0x9E3779B97F4A7C15ull * (index + 1);
    return splitmix64(s);
}

// Normal sampler with a pinned algorithm.  std::normal_distribution is
// implementation-defined, so byte-identical outputs across standard libraries
// require rolling the transform ourselves (Box-Muller on mt19937_64 uniforms).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in (0,1); never returns 0 so log() below is safe
    double uniform() {
        const double u = (gen_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t next_u64() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mrh
