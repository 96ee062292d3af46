#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace betabandit {

// PCG32 (XSH RR 64/32, O'Neill 2014). The state transition is integer-only,
// so streams are bit-identical across platforms and compilers. `stream`
// selects one of 2^63 statistically independent sequences.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(0), inc_((stream << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0,1) with 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Purpose tags for substreams, so draws for different roles never collide
// even when they share a seed.
inline constexpr std::uint64_t kScenarioStream = 1;
inline constexpr std::uint64_t kLifetimeStream = 2;
inline constexpr std::uint64_t kParameterStream = 3;

// splitmix64 finalizer over (base, index). Decorrelates per-trajectory seeds
// so ensembles are reproducible and order-independent under parallel runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Geometric lifetime on {0,1,2,...} with P(k) = (1-rho) rho^k, sampled by
// inverse CDF so the draw is a deterministic function of one uniform.
inline int sample_geometric(Pcg32& rng, double rho) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("sample_geometric: rho must lie in [0,1)");
  if (rho == 0.0) return 0;
  const double v = 1.0 - rng.next_double();  // (0, 1]
  return static_cast<int>(std::floor(std::log(v) / std::log(rho)));
}

inline double sample_normal(Pcg32& rng) {
  double u;
  do {
    u = rng.next_double();
  } while (u <= 0.0);
  const double v = rng.next_double();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(6.283185307179586476925287 * v);
}

// Marsaglia-Tsang squeeze for shape >= 1, with the usual boost for shape < 1.
inline double sample_gamma(Pcg32& rng, double shape) {
  if (!(shape > 0.0))
    throw std::invalid_argument("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(rng, shape + 1.0);
    double u;
    do {
      u = rng.next_double();
    } while (u <= 0.0);
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

inline double sample_beta(Pcg32& rng, double a, double b) {
  const double x = sample_gamma(rng, a);
  const double y = sample_gamma(rng, b);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

}  // namespace betabandit
