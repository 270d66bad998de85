#include "ivbounds/chernoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ivbounds/core.hpp"

namespace ivbounds {

namespace {

constexpr int kGridPoints = 512;
constexpr double kLambdaTol = 1e-10;
constexpr double kTTol = 1e-8;
constexpr double kTMax = 1e6;

// log of the G coefficients n!/(n^m (n-m)!) C(m+d-2, d-2), m = 0..n.
std::vector<double> log_coefficients(int d, std::uint64_t n) {
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  const double nn = static_cast<double>(n);
  for (std::uint64_t m = 0; m < n; ++m) {
    const double md = static_cast<double>(m);
    c[m + 1] = c[m] + std::log((nn - md) / nn) + std::log((md + d - 1) / (md + 1));
  }
  return c;
}

double log_sum(const std::vector<double>& log_coeffs, double lambda) {
  if (lambda == 0.0) return 0.0;
  const double ll = std::log(lambda);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < log_coeffs.size(); ++m) max_log = std::max(max_log, log_coeffs[m] + ll * m);
  double sum = 0.0;
  for (std::size_t m = 0; m < log_coeffs.size(); ++m) sum += std::exp(log_coeffs[m] + ll * m - max_log);
  return max_log + std::log(sum);
}

class TailObjective {
 public:
  explicit TailObjective(const ChernoffSpec& spec) {
    for (auto n : spec.arm_sizes) tables_.push_back(log_coefficients(spec.d, n));
  }
  double operator()(double t, double lambda) const {
    double v = -lambda * t;
    for (const auto& c : tables_) v += log_sum(c, lambda);
    return v;
  }

 private:
  std::vector<std::vector<double>> tables_;
};

}  // namespace

double log_g_polynomial(int d, std::uint64_t n, double lambda) {
  if (d < 2) throw Error(ErrorKind::DomainError, "G needs d >= 2");
  if (n < 1) throw Error(ErrorKind::DomainError, "G needs n >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::DomainError, "lambda must lie in [0, 1]");
  return log_sum(log_coefficients(d, n), lambda);
}

double g_polynomial(int d, std::uint64_t n, double lambda) { return std::exp(log_g_polynomial(d, n, lambda)); }

void ChernoffSpec::validate() const {
  if (d < 2) throw Error(ErrorKind::DomainError, "d must be at least 2");
  if (arm_sizes.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one arm");
  for (auto n : arm_sizes) {
    if (n < 1) throw Error(ErrorKind::ZeroArm, "every arm needs n >= 1");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::DomainError, "alpha must lie in (0, 1]");
}

TailValue tail_bound(const ChernoffSpec& spec, double t) {
  spec.validate();
  if (!(t >= 0.0)) throw Error(ErrorKind::DomainError, "t must be nonnegative");
  if (t == 0.0) return {1.0, 0.0};
  const TailObjective objective(spec);

  int best = 0;
  double best_val = 0.0;  // lambda = 0 gives exactly 0
  for (int j = 1; j < kGridPoints; ++j) {
    const double lambda = static_cast<double>(j) / (kGridPoints - 1);
    const double v = objective(t, lambda);
    if (v < best_val) {
      best_val = v;
      best = j;
    }
  }
  const double step = 1.0 / (kGridPoints - 1);
  double a = best > 0 ? (best - 1) * step : 0.0;
  double b = best < kGridPoints - 1 ? (best + 1) * step : 1.0;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = objective(t, c);
  double fe = objective(t, e);
  while (b - a > kLambdaTol) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = objective(t, c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = objective(t, e);
    }
  }
  const double lambda = 0.5 * (a + b);
  const double refined = objective(t, lambda);
  TailValue out;
  if (refined < best_val) {
    out.rhs = std::exp(refined);
    out.lambda_star = lambda;
  } else {
    out.rhs = std::exp(best_val);
    out.lambda_star = best * step;
  }
  return out;
}

CriticalValue find_t_alpha(const ChernoffSpec& spec) {
  spec.validate();
  CriticalValue cv;
  if (spec.alpha >= 1.0) return cv;

  double lo = 0.0;
  double hi = 1.0;
  TailValue at_hi = tail_bound(spec, hi);
  while (at_hi.rhs > spec.alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > kTMax) throw Error(ErrorKind::NoConvergence, "t_alpha bracket exceeded 1e6");
    at_hi = tail_bound(spec, hi);
  }
  while (hi - lo >= kTTol) {
    const double mid = 0.5 * (lo + hi);
    const TailValue v = tail_bound(spec, mid);
    if (v.rhs <= spec.alpha) {
      hi = mid;
      at_hi = v;
    } else {
      lo = mid;
    }
  }
  cv.t_alpha = hi;
  cv.achieved_rhs = at_hi.rhs;
  cv.lambda_star = at_hi.lambda_star;
  return cv;
}

}  // namespace ivbounds
