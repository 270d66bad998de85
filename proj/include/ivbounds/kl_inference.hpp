#pragma once

// Simultaneous confidence intervals: every functional is optimized over
//
//   { p' : exists p_1..p_Q with H'p' <= H p_z for all z,
//          sum_z n_z KL(phat_z || p_z) <= t_alpha }
//
// with one shared t_alpha. The KL constraint is lifted into one epigraph
// variable per positive phat entry, u >= n (phat log(phat/p) + p - phat), with
// sum u (plus n p on zero-count cells) <= t. Each epigraph is outer-approximated
// by tangent lines; tangents are added at the LP iterate wherever the gap is
// too large, and the dual simplex re-optimizes.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ivbounds/bounds.hpp"
#include "ivbounds/chernoff.hpp"
#include "ivbounds/core.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/inequality_system.hpp"

namespace ivbounds {

/// KL(phat || p) = sum_i phat_i log(phat_i / p_i); zero-mass phat entries
/// contribute nothing, and p_i = 0 < phat_i gives +infinity.
double kl_divergence(std::span<const double> phat, std::span<const double> p);

struct CiOptions {
  std::size_t max_cut_rounds = 500;
  double tol_kl = 1e-7;
  double tol_obj = 1e-6;
};

struct KlOptimum {
  bool feasible = false;
  double value = 0.0;
  std::size_t rounds = 0;
  double weighted_kl = 0.0;  // sum_z n_z KL at the returned iterate
  std::vector<double> p_prime;
  std::vector<std::vector<double>> arms;
};

/// min (sense = +1) or max (sense = -1) of coeffs.p' over the KL-constrained set
/// with budget t. Arms must carry their sample sizes in `n`.
KlOptimum kl_optimize(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                      std::span<const double> coeffs, double sense, double t, const CiOptions& options = {});

struct ConfidenceInterval {
  std::string functional;
  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  double alpha = 0.05;
};

struct CiReport {
  double alpha = 0.05;
  CriticalValue critical;
  bool falsified = false;
  std::vector<ConfidenceInterval> intervals;
};

/// All intervals at the given budget t (alpha only labels the output).
CiReport confidence_intervals_at(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                                 std::span<const LinearFunctional> functionals, double t, double alpha,
                                 const CiOptions& options = {});

/// t_alpha from the Chernoff bound for the arm sizes, then all intervals.
CiReport confidence_intervals(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                              std::span<const LinearFunctional> functionals, double alpha,
                              const CiOptions& options = {});

CiReport confidence_intervals(const InequalitySystem& sys, const Dataset& ds,
                              std::span<const LinearFunctional> functionals, double alpha,
                              const CiOptions& options = {});

class Rng;

/// A population satisfying the IV model: p' over strata and, per arm z and
/// stratum a, the probability assignment[z][a][x-1] of taking treatment x.
struct TruthModel {
  Dims dims;
  CounterfactualDistribution p_prime;
  std::vector<std::vector<std::vector<double>>> assignment;

  /// p_z(x, y) = sum_a p'_a * assignment[z][a][x-1] * 1{a_x = y}.
  std::vector<ObservedDistribution> observed() const;
};

/// Flat Dirichlet draws for p' and for every assignment row.
TruthModel random_truth(const Dims& dims, Rng& rng);

struct CoverageResult {
  std::size_t reps = 0;
  std::size_t covered = 0;
  double coverage = 0.0;
  double t_alpha = 0.0;
};

/// Fraction of simulated datasets whose intervals jointly contain every true
/// functional value.
CoverageResult coverage_monte_carlo(const TruthModel& truth, std::span<const LinearFunctional> functionals,
                                    std::span<const std::uint64_t> arm_sizes, double alpha, std::size_t reps,
                                    std::uint64_t seed, const CiOptions& options = {});

}  // namespace ivbounds
