#pragma once

// Reproducible sampling. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distributions below are written out here
// because the std:: distribution algorithms differ between library vendors.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ivbounds {

inline constexpr const char* kRngVersion = "mt19937_64/exp-dirichlet/v1";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential(1) = Gamma(1, 1).
  double exponential();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Dirichlet(1, ..., 1) on n cells via normalized unit-scale gamma draws.
std::vector<double> dirichlet_flat(Rng& rng, std::size_t n);

/// Multinomial(n, probs) by inverse-CDF sampling of n categorical draws.
std::vector<std::uint64_t> multinomial(Rng& rng, std::uint64_t n, std::span<const double> probs);

}  // namespace ivbounds
