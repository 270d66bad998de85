#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/gmp.hpp>

#include "ivbounds/simplex.hpp"

#ifndef IVB_FIXTURE_DIR
#error "IVB_FIXTURE_DIR must be defined"
#endif

namespace oracle {

using Q = boost::multiprecision::mpq_rational;
using namespace ivbounds;

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(IVB_FIXTURE_DIR) / name; }

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Digit k (0-based, most significant first) of `v` written in base `base` with `len` digits.
std::size_t digit(std::size_t v, std::size_t base, std::size_t len, std::size_t k) {
  return (v / ipow(base, len - 1 - k)) % base;
}

struct TypeLp {
  LinearProgram<double> lp;
  std::vector<std::size_t> stratum_of;  // column -> stratum flat
};

TypeLp type_program(const Dims& d, std::span<const ObservedDistribution> observed) {
  const std::size_t Qz = static_cast<std::size_t>(d.Q), K = static_cast<std::size_t>(d.K),
                    M = static_cast<std::size_t>(d.M);
  const std::size_t nx = ipow(K, Qz), ny = ipow(M, K);
  TypeLp out{LinearProgram<double>(nx * ny), {}};
  out.stratum_of.resize(nx * ny);
  for (std::size_t rx = 0; rx < nx; ++rx) {
    for (std::size_t ry = 0; ry < ny; ++ry) out.stratum_of[rx * ny + ry] = ry;
  }
  for (std::size_t z = 0; z < Qz; ++z) {
    for (std::size_t x = 0; x < K; ++x) {
      for (std::size_t y = 0; y < M; ++y) {
        std::vector<double> row(nx * ny, 0.0);
        for (std::size_t rx = 0; rx < nx; ++rx) {
          if (digit(rx, K, Qz, z) != x) continue;
          for (std::size_t ry = 0; ry < ny; ++ry) {
            if (digit(ry, M, K, x) == y) row[rx * ny + ry] = 1.0;
          }
        }
        out.lp.add_row(std::move(row), RowSense::Equal, observed[z].probs[x * M + y]);
      }
    }
  }
  return out;
}

}  // namespace

Interval response_function_bounds(const Dims& d, std::span<const ObservedDistribution> observed,
                                  std::span<const double> coeffs) {
  TypeLp t = type_program(d, observed);
  Interval out;
  for (int s : {1, -1}) {
    for (std::size_t j = 0; j < t.lp.num_vars; ++j) t.lp.objective[j] = s * coeffs[t.stratum_of[j]];
    const auto r = solve_lp(t.lp);
    if (r.status != LpStatus::Optimal) return out;
    (s == 1 ? out.lo : out.hi) = s * r.objective;
  }
  out.feasible = true;
  return out;
}

bool response_function_feasible(const Dims& d, std::span<const ObservedDistribution> observed) {
  TypeLp t = type_program(d, observed);
  return solve_lp(t.lp).status == LpStatus::Optimal;
}

Interval marginal_closed_form(const Dims& d, std::span<const ObservedDistribution> observed, int i, int y) {
  Interval out{true, 0.0, 1.0};
  for (const auto& o : observed) {
    double other = 0.0;
    for (int yy = 1; yy <= d.M; ++yy) {
      if (yy != y) other += o.probs[static_cast<std::size_t>((i - 1) * d.M + yy - 1)];
    }
    out.lo = std::max(out.lo, o.probs[static_cast<std::size_t>((i - 1) * d.M + y - 1)]);
    out.hi = std::min(out.hi, 1.0 - other);
  }
  return out;
}

namespace {

std::vector<Q> exact_normalized(std::span<const double> p) {
  std::vector<Q> out;
  Q sum = 0;
  for (double v : p) {
    out.emplace_back(v);
    sum += out.back();
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace

bool coupling_exists(const Dims& d, std::span<const double> pA, std::span<const double> pB) {
  const std::size_t K = static_cast<std::size_t>(d.K), M = static_cast<std::size_t>(d.M);
  const std::size_t S = ipow(M, K);
  const auto a = exact_normalized(pA);
  const auto b = exact_normalized(pB);
  // One variable per (stratum s, treatment x): mass moved from s to cell (x, s_x).
  LinearProgram<Q> lp(S * K);
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<Q> row(S * K, Q(0));
    for (std::size_t x = 0; x < K; ++x) row[s * K + x] = 1;
    lp.add_row(std::move(row), RowSense::Equal, a[s]);
  }
  for (std::size_t x = 0; x < K; ++x) {
    for (std::size_t y = 0; y < M; ++y) {
      std::vector<Q> row(S * K, Q(0));
      for (std::size_t s = 0; s < S; ++s) {
        if (digit(s, M, K, x) == y) row[s * K + x] = 1;
      }
      lp.add_row(std::move(row), RowSense::Equal, b[x * M + y]);
    }
  }
  return solve_lp(lp).status == LpStatus::Optimal;
}

bool strassen_all_subsets(const Dims& d, std::span<const double> pA, std::span<const double> pB) {
  const std::size_t K = static_cast<std::size_t>(d.K), M = static_cast<std::size_t>(d.M);
  const std::size_t S = ipow(M, K);
  const auto a = exact_normalized(pA);
  const auto b = exact_normalized(pB);
  for (std::uint64_t u = 1; u < (std::uint64_t{1} << S); ++u) {
    Q mass_a = 0;
    std::vector<bool> hit(K * M, false);
    for (std::size_t s = 0; s < S; ++s) {
      if (((u >> s) & 1U) == 0) continue;
      mass_a += a[s];
      for (std::size_t x = 0; x < K; ++x) hit[x * M + digit(s, M, K, x)] = true;
    }
    Q mass_b = 0;
    for (std::size_t c = 0; c < K * M; ++c) {
      if (hit[c]) mass_b += b[c];
    }
    if (mass_a > mass_b) return false;
  }
  return true;
}

double log_g(int d, std::uint64_t n, double lambda) {
  const double nn = static_cast<double>(n);
  std::vector<double> terms;
  for (std::uint64_t m = 0; m <= n; ++m) {
    const double md = static_cast<double>(m);
    const double lc = std::lgamma(nn + 1) - md * std::log(nn) - std::lgamma(nn - md + 1) + std::lgamma(md + d - 1) -
                      std::lgamma(static_cast<double>(d - 1)) - std::lgamma(md + 1);
    if (m == 0) {
      terms.push_back(0.0);
    } else if (lambda > 0.0) {
      terms.push_back(lc + md * std::log(lambda));
    }
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

double tail_rhs_grid(int d, std::span<const std::uint64_t> n, double t, std::size_t points) {
  double best = 0.0;  // lambda = 0
  for (std::size_t j = 1; j < points; ++j) {
    const double lambda = static_cast<double>(j) / static_cast<double>(points - 1);
    double v = -lambda * t;
    for (auto nz : n) v += log_g(d, nz, lambda);
    best = std::min(best, v);
  }
  return std::exp(best);
}

double t_alpha_grid(int d, std::span<const std::uint64_t> n, double alpha) {
  auto t_of = [&](double lambda) {
    double l = 0.0;
    for (auto nz : n) l += log_g(d, nz, lambda);
    return (l - std::log(alpha)) / lambda;
  };
  double lo = 0.0, hi = 1.0;
  for (int pass = 0; pass < 4; ++pass) {
    constexpr int kPoints = 400;
    double best = std::numeric_limits<double>::infinity(), arg = hi;
    for (int j = 0; j <= kPoints; ++j) {
      const double lambda = lo + (hi - lo) * j / kPoints;
      if (lambda <= 0.0) continue;
      const double v = t_of(lambda);
      if (v < best) {
        best = v;
        arg = lambda;
      }
    }
    const double w = (hi - lo) / kPoints;
    lo = std::max(0.0, arg - 2 * w);
    hi = std::min(1.0, arg + 2 * w);
    if (pass == 3) return best;
  }
  return 0.0;
}

std::vector<ObservedDistribution> random_compatible(const Dims& d, Rng& rng, std::size_t components) {
  const std::size_t S = ipow(static_cast<std::size_t>(d.M), static_cast<std::size_t>(d.K));
  std::vector<ObservedDistribution> out(static_cast<std::size_t>(d.Q));
  for (int z = 0; z < d.Q; ++z) {
    out[static_cast<std::size_t>(z)].arm = z + 1;
    out[static_cast<std::size_t>(z)].probs.assign(d.cells(), 0.0);
  }
  const auto w = dirichlet_flat(rng, components);
  for (std::size_t c = 0; c < components; ++c) {
    const std::size_t s = rng.next() % S;
    for (int z = 0; z < d.Q; ++z) {
      const std::size_t x = rng.next() % static_cast<std::size_t>(d.K);
      const std::size_t y = digit(s, static_cast<std::size_t>(d.M), static_cast<std::size_t>(d.K), x);
      out[static_cast<std::size_t>(z)].probs[x * static_cast<std::size_t>(d.M) + y] += w[c];
    }
  }
  for (auto& o : out) {
    double sum = 0.0;
    for (double v : o.probs) sum += v;
    for (double& v : o.probs) v /= sum;
  }
  return out;
}

std::vector<ObservedDistribution> random_arms(const Dims& d, Rng& rng) {
  std::vector<ObservedDistribution> out;
  for (int z = 1; z <= d.Q; ++z) out.push_back({z, dirichlet_flat(rng, d.cells()), 0});
  return out;
}

}  // namespace oracle
