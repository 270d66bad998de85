#pragma once

// Tail bound for sum_z n_z KL(phat_z || p_z):
//
//   P(sum_z n_z KL >= t) <= min_{lambda in [0,1]} exp(-lambda t) prod_z G_{d,n_z}(lambda),
//
// with G_{d,n}(lambda) = sum_{m=0}^{n} n!/(n^m (n-m)!) C(m+d-2, d-2) lambda^m.

#include <cstdint>
#include <vector>

namespace ivbounds {

/// log G_{d,n}(lambda). Terms come from the ratio recurrence
/// t_{m+1}/t_m = (n-m)/n * (m+d-1)/(m+1) * lambda and are summed with log-sum-exp.
double log_g_polynomial(int d, std::uint64_t n, double lambda);

double g_polynomial(int d, std::uint64_t n, double lambda);

struct ChernoffSpec {
  int d = 2;  // K*M
  std::vector<std::uint64_t> arm_sizes;
  double alpha = 0.05;

  void validate() const;
};

struct TailValue {
  double rhs = 1.0;
  double lambda_star = 0.0;
};

/// 512-point grid over [0,1], then golden-section refinement around the best
/// grid point to |dlambda| < 1e-10. Exactly 1 at t = 0.
TailValue tail_bound(const ChernoffSpec& spec, double t);

inline double tail_rhs(const ChernoffSpec& spec, double t) { return tail_bound(spec, t).rhs; }

struct CriticalValue {
  double t_alpha = 0.0;
  double achieved_rhs = 1.0;
  double lambda_star = 0.0;
};

/// Smallest t with tail_rhs(t) <= alpha: bracket doubling from t = 1 (capped at
/// 1e6), then bisection to |dt| < 1e-8. The returned t is the upper end of the
/// final bracket, so achieved_rhs <= alpha.
CriticalValue find_t_alpha(const ChernoffSpec& spec);

}  // namespace ivbounds
