#pragma once

// The per-arm inequality system
//
//   P'(Y(x_1) in V1, ..., Y(x_K) in VK) <= sum_i P(X = i, Y in Vi | Z = z)
//
// indexed by families (V1, ..., VK) of nonempty subsets of [M], not all equal
// to [M]. Each row is stored as a pair of binary vectors (lhs over strata,
// rhs over cells); the same rows apply to every instrument arm.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivbounds/binary_vector.hpp"
#include "ivbounds/core.hpp"

namespace ivbounds {

/// K subsets of [M]; bit (m-1) of masks[k] is set iff m is in V^(k+1).
struct SubsetFamily {
  std::vector<std::uint32_t> masks;

  friend bool operator==(const SubsetFamily&, const SubsetFamily&) = default;
  friend auto operator<=>(const SubsetFamily&, const SubsetFamily&) = default;
};

/// Builds a family from explicit 1-based level lists, e.g. {{1,2,3},{1,2}}.
SubsetFamily make_family(const Dims& dims, const std::vector<std::vector<int>>& sets);

std::string to_string(const SubsetFamily& family);

/// True iff every subset is nonempty and at least one is a strict subset of [M].
bool is_valid_family(const Dims& dims, const SubsetFamily& family);

/// Keeps the row iff at least two coordinates are strict subsets, or exactly one
/// coordinate is strict and it omits a single level.
bool is_nonredundant_family(const Dims& dims, const SubsetFamily& family);

enum class RowTag { Nonredundant, Redundant };

struct InequalityRow {
  SubsetFamily family;
  BinaryVector lhs;  // length M^K: strata in V1 x ... x VK
  BinaryVector rhs;  // length K*M: cells (i, y) with y in Vi
  RowTag tag = RowTag::Nonredundant;
};

InequalityRow make_row(const Dims& dims, const SubsetFamily& family);

struct InequalitySystem {
  Dims dims;
  std::vector<InequalityRow> rows;  // per arm

  std::size_t rows_per_arm() const { return rows.size(); }

  /// Dense H' (rows x M^K) and H (rows x K*M) as 0/1 integers.
  std::vector<std::vector<int>> lhs_matrix() const;
  std::vector<std::vector<int>> rhs_matrix() const;
};

inline constexpr std::uint64_t kDefaultRowCap = 10'000'000;

/// All (2^M-1)^K - 1 families in canonical order: lexicographic over the tuple
/// of masks, V^(1) most significant. Throws SizeOverflow above `cap` rows.
InequalitySystem enumerate_full(const Dims& dims, std::uint64_t cap = kDefaultRowCap);

/// Rows of `sys` whose family passes is_nonredundant_family, order preserved.
InequalitySystem filter_nonredundant(const InequalitySystem& sys);

/// enumerate_full followed by filter_nonredundant.
InequalitySystem nonredundant_system(const Dims& dims, std::uint64_t cap = kDefaultRowCap);

struct InequalityCounts {
  std::uint64_t total = 0;         // Q((2^M-1)^K - 1)
  std::uint64_t nonredundant = 0;  // Q((2^M-1)^K - K(2^M-M-2) - 1)
};

/// Closed-form counts; throws SizeOverflow if they do not fit in 64 bits.
InequalityCounts count_inequalities(const Dims& dims);

/// Rows whose subsets are each either [M] or a singleton: the closed-form
/// bounds on joint marginal probabilities. (M+1)^K - 1 rows.
std::vector<InequalityRow> marginal_bound_rows(const Dims& dims);

/// JSON `{dims, rows:[{V, lhs_support, rhs_support, tag}]}`.
std::string system_to_json(const InequalitySystem& sys);

/// Dense CSV of [-H' | H], one line per row, with a header naming each column.
void write_dense_csv(const InequalitySystem& sys, std::ostream& out);

}  // namespace ivbounds
