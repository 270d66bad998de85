#include "ivbounds/random.hpp"

#include <cmath>

namespace ivbounds {

double Rng::exponential() { return -std::log(uniform()); }

std::vector<double> dirichlet_flat(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& v : out) {
    v = rng.exponential();
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

std::vector<std::uint64_t> multinomial(Rng& rng, std::uint64_t n, std::span<const double> probs) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  std::vector<std::uint64_t> counts(probs.size(), 0);
  for (std::uint64_t t = 0; t < n; ++t) {
    const double u = rng.uniform() * acc;
    std::size_t i = 0;
    while (i + 1 < cdf.size() && (u >= cdf[i] || probs[i] == 0.0)) ++i;
    // Rounding can leave u just above the last positive cell.
    while (probs[i] == 0.0 && i > 0) --i;
    ++counts[i];
  }
  return counts;
}

}  // namespace ivbounds
