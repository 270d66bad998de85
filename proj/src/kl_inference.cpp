#include "ivbounds/kl_inference.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ivbounds/random.hpp"
#include "ivbounds/simplex.hpp"

namespace ivbounds {

namespace {

constexpr double kGradientFloor = 1e-12;
constexpr int kBisectionSteps = 100;
constexpr double kBoundSlack = 1e-12;
constexpr int kInitialTangents = 8;
constexpr double kCutFeasibilityTol = 1e-11;
constexpr double kDriftTol = 1e-8;

double kl_bernoulli(double q, double p) {
  auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  return term(q, p) + term(1.0 - q, 1.0 - p);
}

// Interval of p_i compatible with n * KL(q || p) <= t after merging the other
// cells: KL never increases under merging, so this is a valid outer bound.
std::pair<double, double> coordinate_range(double q, double budget) {
  double lo = 0.0;
  if (q > 0.0) {
    double a = 0.0;  // infeasible end
    double b = q;    // feasible end
    for (int i = 0; i < kBisectionSteps; ++i) {
      const double m = 0.5 * (a + b);
      (kl_bernoulli(q, m) > budget ? a : b) = m;
    }
    lo = std::max(0.0, a - kBoundSlack);
  }
  double hi = 1.0;
  if (q < 1.0) {
    double a = q;    // feasible end
    double b = 1.0;  // infeasible end
    for (int i = 0; i < kBisectionSteps; ++i) {
      const double m = 0.5 * (a + b);
      (kl_bernoulli(q, m) > budget ? b : a) = m;
    }
    hi = std::min(1.0, b + kBoundSlack);
  }
  return {lo, hi};
}

struct Layout {
  std::size_t S = 0;
  std::size_t C = 0;
  std::size_t Q = 0;
  std::size_t n() const { return S + Q * C; }
  std::size_t arm(std::size_t z, std::size_t cell) const { return S + z * C + cell; }
};

// Largest violation of the original rows at x; guards the incremental tableau.
double max_violation(const LinearProgram<double>& lp, std::span<const double> x) {
  double worst = 0.0;
  for (const auto& r : lp.rows) {
    double a = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) a += r.coeffs[j] * x[j];
    const double v = r.sense == RowSense::LessEqual      ? a - r.rhs
                     : r.sense == RowSense::GreaterEqual ? r.rhs - a
                                                         : std::abs(a - r.rhs);
    worst = std::max(worst, v);
  }
  return worst;
}

double weighted_kl(const Layout& L, std::span<const ObservedDistribution> observed, std::span<const double> x) {
  double total = 0.0;
  for (std::size_t z = 0; z < L.Q; ++z) {
    const auto& o = observed[z];
    total += static_cast<double>(o.n) * kl_divergence(o.probs, x.subspan(L.arm(z, 0), L.C));
  }
  return total;
}

}  // namespace

double kl_divergence(std::span<const double> phat, std::span<const double> p) {
  if (phat.size() != p.size()) throw Error(ErrorKind::DimensionMismatch, "KL arguments differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < phat.size(); ++i) {
    if (phat[i] == 0.0) continue;
    if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
    total += phat[i] * std::log(phat[i] / p[i]);
  }
  return total;
}

KlOptimum kl_optimize(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                      std::span<const double> coeffs, double sense, double t, const CiOptions& options) {
  const Dims& d = sys.dims;
  if (observed.empty()) throw Error(ErrorKind::DimensionMismatch, "need at least one observed arm");
  if (coeffs.size() != d.strata()) throw Error(ErrorKind::DimensionMismatch, "functional length differs from M^K");
  if (!(t >= 0.0)) throw Error(ErrorKind::DomainError, "KL budget must be nonnegative");
  const Layout L{d.strata(), d.cells(), observed.size()};
  for (const auto& o : observed) {
    if (o.probs.size() != L.C) throw Error(ErrorKind::DimensionMismatch, "observed distribution length differs from K*M");
    if (o.n == 0) throw Error(ErrorKind::ZeroArm, "KL inference needs n >= 1 in every arm");
  }

  KlOptimum out;
  if (t == 0.0) {
    // The ball is the single point phat.
    LinearFunctional f;
    f.coeffs.assign(coeffs.begin(), coeffs.end());
    const auto b = plugin_bounds(sys, observed, f);
    if (b.status == Feasibility::Infeasible) return out;
    out.feasible = true;
    out.value = sense > 0 ? b.lower : b.upper;
    out.p_prime = sense > 0 ? b.witness_lower.probs : b.witness_upper.probs;
    for (const auto& o : observed) out.arms.push_back(o.probs);
    return out;
  }

  // One epigraph variable per cell with phat > 0:
  //   u >= h(p) = n (phat log(phat / p) + p - phat),
  // a convex function of a single coordinate. Since sum_i (p_i - phat_i) = 0 on
  // the simplex, sum_z n_z KL_z = sum u + sum_{phat = 0} n_z p_{z,i} at equality.
  std::vector<std::size_t> term_var;  // p_z coordinate of each term
  for (std::size_t z = 0; z < L.Q; ++z) {
    for (std::size_t k = 0; k < L.C; ++k) {
      if (observed[z].probs[k] > 0.0) term_var.push_back(L.arm(z, k));
    }
  }
  const std::size_t T = term_var.size();
  const std::size_t nvar = L.n() + T;
  std::vector<double> phat(L.n(), 0.0);
  std::vector<double> weight(L.n(), 0.0);
  for (std::size_t z = 0; z < L.Q; ++z) {
    for (std::size_t k = 0; k < L.C; ++k) {
      phat[L.arm(z, k)] = observed[z].probs[k];
      weight[L.arm(z, k)] = static_cast<double>(observed[z].n);
    }
  }
  auto h = [&](std::size_t j, double p) {
    return weight[j] * (phat[j] * std::log(phat[j] / p) + p - phat[j]);
  };

  LinearProgram<double> lp(nvar);
  for (std::size_t s = 0; s < L.S; ++s) lp.objective[s] = sense * coeffs[s];
  for (std::size_t z = 0; z < L.Q; ++z) {
    for (const auto& row : sys.rows) {
      std::vector<double> c(nvar, 0.0);
      for (auto s : row.lhs.support()) c[s] = 1.0;
      for (auto cell : row.rhs.support()) c[L.arm(z, cell)] = -1.0;
      lp.add_row(std::move(c), RowSense::LessEqual, 0.0);
    }
  }
  {
    std::vector<double> c(nvar, 0.0);
    std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(L.S), 1.0);
    lp.add_row(c, RowSense::Equal, 1.0);
    for (std::size_t z = 0; z < L.Q; ++z) {
      std::fill(c.begin(), c.end(), 0.0);
      for (std::size_t k = 0; k < L.C; ++k) c[L.arm(z, k)] = 1.0;
      lp.add_row(c, RowSense::Equal, 1.0);
    }
  }
  {
    std::vector<double> budget(nvar, 0.0);
    for (std::size_t j = L.S; j < L.n(); ++j) {
      if (phat[j] == 0.0) budget[j] = weight[j];
    }
    for (std::size_t i = 0; i < T; ++i) budget[L.n() + i] = 1.0;
    lp.add_row(budget, RowSense::LessEqual, t);
  }

  // Coordinate ranges implied by the budget, and a few tangents per term
  // spread across each range so the first relaxation is already tight.
  std::vector<double> floor(L.n(), 0.0);
  auto tangent = [&](std::size_t i, double p0) {
    const std::size_t j = term_var[i];
    const double slope = weight[j] * (1.0 - phat[j] / p0);
    std::vector<double> c(nvar, 0.0);
    c[L.n() + i] = 1.0;
    c[j] = -slope;
    const double rhs = h(j, p0) - slope * p0;
    return std::make_pair(std::move(c), rhs);
  };
  for (std::size_t j = L.S; j < L.n(); ++j) {
    const auto [lo, hi] = coordinate_range(phat[j], t / weight[j]);
    floor[j] = std::max(lo, kGradientFloor);
    std::vector<double> c(nvar, 0.0);
    c[j] = 1.0;
    if (lo > 0.0) lp.add_row(c, RowSense::GreaterEqual, lo);
    if (hi < 1.0) lp.add_row(c, RowSense::LessEqual, hi);
  }
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t j = term_var[i];
    const auto [lo, hi] = coordinate_range(phat[j], t / weight[j]);
    for (int k = 1; k <= kInitialTangents; ++k) {
      const double p0 = std::max(floor[j], lo + (hi - lo) * k / (kInitialTangents + 1));
      auto [c, rhs] = tangent(i, p0);
      lp.add_row(std::move(c), RowSense::GreaterEqual, rhs);
    }
  }

  // Tangent rows keep u with unit coefficient, so a row's violation is the KL
  // gap itself; the tolerance sits well below the per-term cut threshold.
  auto lp_options = SimplexOptions<double>::defaults();
  lp_options.feasibility_tol = kCutFeasibilityTol;
  auto simplex = std::make_unique<Simplex<double>>(lp, lp_options);
  LpResult<double> res = simplex->solve();
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t round = 0;; ++round) {
    if (round == 0 && res.status == LpStatus::Infeasible) return out;
    if (res.status != LpStatus::Optimal || max_violation(lp, res.x) > kDriftTol) {
      // Confirm from scratch with every cut so far: the dual simplex may have
      // stopped early or its tableau drifted from the original rows.
      simplex = std::make_unique<Simplex<double>>(lp, lp_options);
      res = simplex->solve();
      if (res.status == LpStatus::Infeasible) return out;
      if (res.status != LpStatus::Optimal) {
        throw Error(ErrorKind::LpFailure, std::string("KL relaxation ended with status ") + to_string(res.status));
      }
    }
    const std::span<const double> x(res.x.data(), L.n());
    const double kl = weighted_kl(L, observed, x);
    if (kl <= t + options.tol_kl && std::abs(res.objective - previous) < options.tol_obj) {
      out.feasible = true;
      out.value = sense * res.objective;
      out.rounds = round;
      out.weighted_kl = kl;
      out.p_prime.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(L.S));
      for (std::size_t z = 0; z < L.Q; ++z) {
        const auto first = res.x.begin() + static_cast<std::ptrdiff_t>(L.arm(z, 0));
        out.arms.emplace_back(first, first + static_cast<std::ptrdiff_t>(L.C));
      }
      return out;
    }
    if (round >= options.max_cut_rounds) {
      throw Error(ErrorKind::NoConvergence, "KL cutting planes did not converge in " +
                                                std::to_string(options.max_cut_rounds) + " rounds");
    }
    previous = res.objective;

    // Tangent at the iterate for every term the relaxation underestimates.
    const double gap_tol = options.tol_kl / static_cast<double>(2 * std::max<std::size_t>(T, 1));
    bool added = false;
    for (std::size_t i = 0; i < T; ++i) {
      const std::size_t j = term_var[i];
      const double p0 = std::max(res.x[j], floor[j]);
      if (h(j, p0) - res.x[L.n() + i] <= gap_tol) continue;
      auto [c, rhs] = tangent(i, p0);
      simplex->append_row(c, RowSense::GreaterEqual, rhs);
      lp.add_row(std::move(c), RowSense::GreaterEqual, rhs);
      added = true;
    }
    if (added) res = simplex->reoptimize();
  }
}

CiReport confidence_intervals_at(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                                 std::span<const LinearFunctional> functionals, double t, double alpha,
                                 const CiOptions& options) {
  if (functionals.empty()) throw Error(ErrorKind::InvalidArgument, "no functionals requested");
  CiReport report;
  report.alpha = alpha;
  report.critical.t_alpha = t;
  for (const auto& f : functionals) {
    ConfidenceInterval ci;
    ci.functional = f.label;
    ci.alpha = alpha;
    const auto lo = kl_optimize(sys, observed, f.coeffs, 1.0, t, options);
    if (!lo.feasible) {
      report.falsified = true;
      report.intervals.push_back(ci);
      continue;
    }
    const auto hi = kl_optimize(sys, observed, f.coeffs, -1.0, t, options);
    if (!hi.feasible) {
      report.falsified = true;
      report.intervals.push_back(ci);
      continue;
    }
    ci.lower = lo.value;
    ci.upper = hi.value;
    report.intervals.push_back(ci);
  }
  return report;
}

CiReport confidence_intervals(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                              std::span<const LinearFunctional> functionals, double alpha,
                              const CiOptions& options) {
  ChernoffSpec spec;
  spec.d = static_cast<int>(sys.dims.cells());
  spec.alpha = alpha;
  for (const auto& o : observed) spec.arm_sizes.push_back(o.n);
  const auto cv = find_t_alpha(spec);
  auto report = confidence_intervals_at(sys, observed, functionals, cv.t_alpha, alpha, options);
  report.critical = cv;
  return report;
}

CiReport confidence_intervals(const InequalitySystem& sys, const Dataset& ds,
                              std::span<const LinearFunctional> functionals, double alpha,
                              const CiOptions& options) {
  const auto observed = empirical_distributions(ds);
  return confidence_intervals(sys, observed, functionals, alpha, options);
}

std::vector<ObservedDistribution> TruthModel::observed() const {
  std::vector<ObservedDistribution> out;
  for (int z = 1; z <= dims.Q; ++z) {
    ObservedDistribution o;
    o.arm = z;
    o.probs.assign(dims.cells(), 0.0);
    const auto& w = assignment[static_cast<std::size_t>(z - 1)];
    for (std::size_t a = 0; a < dims.strata(); ++a) {
      for (int x = 1; x <= dims.K; ++x) {
        o.probs[cell_flat(dims, {x, stratum_outcome(dims, a, x)})] +=
            p_prime.probs[a] * w[a][static_cast<std::size_t>(x - 1)];
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

TruthModel random_truth(const Dims& dims, Rng& rng) {
  TruthModel m;
  m.dims = dims;
  m.p_prime.probs = dirichlet_flat(rng, dims.strata());
  m.assignment.resize(static_cast<std::size_t>(dims.Q));
  for (auto& arm : m.assignment) {
    for (std::size_t a = 0; a < dims.strata(); ++a) arm.push_back(dirichlet_flat(rng, static_cast<std::size_t>(dims.K)));
  }
  return m;
}

CoverageResult coverage_monte_carlo(const TruthModel& truth, std::span<const LinearFunctional> functionals,
                                    std::span<const std::uint64_t> arm_sizes, double alpha, std::size_t reps,
                                    std::uint64_t seed, const CiOptions& options) {
  const Dims& d = truth.dims;
  if (arm_sizes.size() != static_cast<std::size_t>(d.Q)) {
    throw Error(ErrorKind::DimensionMismatch, "need one sample size per arm");
  }
  const auto sys = nonredundant_system(d);
  const auto population = truth.observed();
  ChernoffSpec spec;
  spec.d = static_cast<int>(d.cells());
  spec.alpha = alpha;
  spec.arm_sizes.assign(arm_sizes.begin(), arm_sizes.end());
  const double t = find_t_alpha(spec).t_alpha;

  std::vector<double> truth_values;
  for (const auto& f : functionals) {
    double v = 0.0;
    for (std::size_t s = 0; s < f.coeffs.size(); ++s) v += f.coeffs[s] * truth.p_prime.probs[s];
    truth_values.push_back(v);
  }

  Rng rng(seed);
  CoverageResult res;
  res.reps = reps;
  res.t_alpha = t;
  std::vector<ObservedDistribution> sample(population.size());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t z = 0; z < population.size(); ++z) {
      const auto counts = multinomial(rng, arm_sizes[z], population[z].probs);
      auto& o = sample[z];
      o.arm = static_cast<int>(z + 1);
      o.n = arm_sizes[z];
      o.probs.resize(counts.size());
      for (std::size_t k = 0; k < counts.size(); ++k) {
        o.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(arm_sizes[z]);
      }
    }
    const auto report = confidence_intervals_at(sys, sample, functionals, t, alpha, options);
    bool all = true;
    for (std::size_t i = 0; i < truth_values.size(); ++i) {
      const auto& ci = report.intervals[i];
      all = all && ci.lower <= truth_values[i] + 1e-9 && truth_values[i] <= ci.upper + 1e-9;
    }
    if (all) ++res.covered;
  }
  res.coverage = reps ? static_cast<double>(res.covered) / static_cast<double>(reps) : 0.0;
  return res;
}

}  // namespace ivbounds
