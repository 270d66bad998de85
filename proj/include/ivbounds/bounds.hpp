#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ivbounds/core.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/inequality_system.hpp"
#include "ivbounds/simplex.hpp"

namespace ivbounds {

/// Linear functional f(p') = coeffs . p' over the strata.
struct LinearFunctional {
  std::vector<double> coeffs;
  std::string label;

  /// P'(Y(x_i) = y).
  static LinearFunctional marginal(const Dims& dims, int i, int y);
  /// P'(Y(x_i) = y) - P'(Y(x_j) = y).
  static LinearFunctional ate(const Dims& dims, int i, int j, int y);
  /// P'(Y(x_1) = y1, ..., Y(x_K) = yK).
  static LinearFunctional stratum(const Dims& dims, const std::vector<int>& outcomes);
  static LinearFunctional raw(const Dims& dims, std::vector<double> coeffs);

  bool is_zero() const;
};

/// Maps a level token for variable 'x' or 'y' to a 1-based level.
using LevelResolver = std::function<int(char variable, const std::string& token)>;

/// Parses `ate(i,i',y)`, `marginal(i,y)`, `stratum(y1,...,yK)` or `raw([c0,...])`.
LinearFunctional parse_functional(const std::string& text, const Dims& dims, const LevelResolver& resolve);
/// Integer levels only.
LinearFunctional parse_functional(const std::string& text, const Dims& dims);
/// Levels may be labels of `ds`; the label uses the dataset's level names.
LinearFunctional parse_functional(const std::string& text, const Dataset& ds);

enum class Feasibility { Feasible, Infeasible };

const char* to_string(Feasibility f);

struct BoundsResult {
  std::string functional;
  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  Feasibility status = Feasibility::Infeasible;
  CounterfactualDistribution witness_lower;
  CounterfactualDistribution witness_upper;
  bool degenerate_functional = false;  // all-zero coefficients; reported as [0, 0]
};

inline constexpr double kInfeasibilityTolerance = 1e-9;

/// The LP constraints {p' in simplex : H'p' <= H p_z for every arm}; objective zero.
LinearProgram<double> plugin_program(const InequalitySystem& sys, std::span<const ObservedDistribution> observed);

/// Sharp plug-in bounds: min and max of f over the constraint set above.
BoundsResult plugin_bounds(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                           const LinearFunctional& f);

/// Feasibility of the constraint set; Infeasible means the IV model is falsified.
Feasibility falsify(const InequalitySystem& sys, std::span<const ObservedDistribution> observed);

/// Number of arms per subset for the Helly check: the feasible sets live in the
/// (M^K - 1)-dimensional simplex of counterfactual distributions, so M^K.
std::size_t helly_subset_size(const Dims& dims);

/// Same verdict as falsify(), computed as "every helly_subset_size() arms are
/// jointly feasible". Delegates to falsify() when there are not more arms than that.
Feasibility falsify_helly(const InequalitySystem& sys, std::span<const ObservedDistribution> observed);

struct SimulationResult {
  Dims dims;
  std::size_t draws = 0;
  std::size_t infeasible = 0;
  double proportion = 0.0;
};

/// Fraction of draws (each arm i.i.d. flat Dirichlet over the K*M cells) that
/// falsify the model. Deterministic for a fixed seed.
SimulationResult simulate_falsification(const Dims& dims, std::size_t draws, std::uint64_t seed);

}  // namespace ivbounds
