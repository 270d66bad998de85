#pragma once

// Dimensions, index conventions and probability-vector types shared by every
// other part of the library.
//
// Conventions (fixed so that matrices and fixtures are reproducible):
//   * levels are 1-based everywhere in the public API and in I/O;
//   * a cell (x, y) of the observed table has flat index (x-1)*M + (y-1);
//   * a principal stratum (y^1, ..., y^K) has flat index
//     sum_k (y^k - 1) * M^(K-k), i.e. y^1 is the most significant digit.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivbounds {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  ZeroArm,
  SizeOverflow,
  LpFailure,
  NoConvergence,
  DomainError,
  ParseError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Instrument, treatment and outcome level counts.
struct Dims {
  int Q = 1;
  int K = 2;
  int M = 2;

  /// Validating constructor; throws InvalidArgument unless Q >= 1, K >= 2, M >= 2.
  static Dims make(int Q, int K, int M);

  std::size_t strata() const;  // M^K
  std::size_t cells() const { return static_cast<std::size_t>(K) * static_cast<std::size_t>(M); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Observed (X, Y) cell, 1-based levels.
struct CellIndex {
  int x = 1;
  int y = 1;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

std::size_t cell_flat(const Dims& dims, CellIndex cell);
CellIndex cell_from_flat(const Dims& dims, std::size_t flat);

/// Principal stratum (Y(x_1), ..., Y(x_K)), 1-based outcome levels.
struct StratumIndex {
  std::vector<int> outcomes;

  friend bool operator==(const StratumIndex&, const StratumIndex&) = default;
};

std::size_t stratum_flat(const Dims& dims, std::span<const int> outcomes);
inline std::size_t stratum_flat(const Dims& dims, const StratumIndex& s) {
  return stratum_flat(dims, std::span<const int>(s.outcomes));
}
StratumIndex stratum_from_flat(const Dims& dims, std::size_t flat);

/// Outcome level (1-based) of treatment `x` (1-based) in stratum `flat`.
int stratum_outcome(const Dims& dims, std::size_t flat, int x);

struct IndexRoundtripReport {
  bool ok = true;
  std::size_t strata_checked = 0;
  std::size_t cells_checked = 0;
  std::vector<std::string> failures;
};

/// Exhaustively checks that the flat <-> structured maps are mutually inverse.
IndexRoundtripReport index_roundtrip(const Dims& dims);

inline constexpr double kProbabilitySumTolerance = 1e-12;

/// P(X, Y | Z = arm) as a vector indexed by cell_flat.
struct ObservedDistribution {
  int arm = 1;
  std::vector<double> probs;
  std::uint64_t n = 0;

  /// Throws DomainError on negative entries or a sum off by more than 1e-12.
  void validate(const Dims& dims) const;
};

/// Joint distribution of potential outcomes, indexed by stratum_flat.
struct CounterfactualDistribution {
  std::vector<double> probs;

  void validate(const Dims& dims) const;
};

}  // namespace ivbounds
