// rng.hpp -- counter-based random number generation.  Each (seed, stream)
// pair yields an independent sequence, so path i of a Monte Carlo batch is
// reproducible regardless of batch size, thread count or evaluation order.
#pragma once

#include <cstdint>
#include <cmath>

#include "numerics.hpp"

namespace glwb {

namespace detail {
// Stafford variant 13 of the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(detail::mix64(seed ^ 0x9e3779b97f4a7c15ULL) ^
               detail::mix64(stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL)),
          ctr_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t v = detail::mix64(key_ + ctr_ * 0x9e3779b97f4a7c15ULL);
        ++ctr_;
        return detail::mix64(v ^ (key_ >> 1));
    }

    // Uniform on (0,1), never returning the endpoints.
    double next_uniform() {
        return (double(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double next_normal() { return inverse_normal_cdf(next_uniform()); }

    // Bernoulli(1/2) draw.
    bool next_bit() { return (next_u64() & 1u) != 0; }

    // Gamma(shape a, scale 1) by Marsaglia-Tsang; valid for a > 0.
    double next_gamma(double a) {
        if (a < 1.0) {
            double u = next_uniform();
            return next_gamma(a + 1.0) * std::pow(u, 1.0 / a);
        }
        double d = a - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_;
};

} // namespace glwb
