#pragma once

// Brute-force checks of the inequality system at small dimensions. Everything
// here is exact: probabilities are converted to rationals before comparison and
// all LPs run over mpq.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ivbounds/binary_vector.hpp"
#include "ivbounds/core.hpp"
#include "ivbounds/inequality_system.hpp"
#include "ivbounds/rational.hpp"

namespace ivbounds {

/// Bipartite relation between strata and cells: a ~ (i, y) iff a_i = y.
/// Edge (a, i) has index a * K + (i - 1); each stratum has exactly K edges.
struct CoherenceRelation {
  Dims dims;
  std::vector<std::size_t> edge_stratum;
  std::vector<std::size_t> edge_cell;

  std::size_t num_edges() const { return edge_stratum.size(); }
  bool contains(std::size_t stratum, std::size_t cell) const;
};

CoherenceRelation build_coherence(const Dims& dims);

/// U = V1 x ... x VK as an indicator over strata.
BinaryVector cartesian_set(const Dims& dims, const SubsetFamily& family);

/// N(U): cells adjacent to some stratum of U.
BinaryVector neighbors(const CoherenceRelation& rel, const BinaryVector& strata);

/// R_C(U) = edges inside U x N(U) together with edges inside (not U) x (not N(U)).
BinaryVector edge_certificate(const CoherenceRelation& rel, const BinaryVector& strata);

enum class StrassenMode { Cartesian, AllSubsets };

inline constexpr std::size_t kAllSubsetsMaxStrata = 20;

/// Whether a coupling of pA (strata) and pB (cells) supported on the coherence
/// relation exists, via P_A(U) <= P_B(N(U)). Cartesian mode ranges over the
/// Cartesian U only; AllSubsets over every nonempty proper U (M^K <= 20).
/// Both inputs are converted to rationals and renormalized to sum to one.
bool strassen_feasible(const Dims& dims, std::span<const double> pA, std::span<const double> pB,
                       StrassenMode mode = StrassenMode::Cartesian);

inline constexpr std::size_t kProp1CandidateCap = 1'000'000;

/// Redundancy of each family's row by certificate containment: the row for U is
/// redundant iff R_C(U) is contained in R_C(U') for some other candidate U'.
/// Candidates are the Cartesian U' (every valid family), or with AllSubsets
/// every nonempty proper subset of strata (K = M = 2 only).
class Prop1Searcher {
 public:
  explicit Prop1Searcher(const Dims& dims, StrassenMode mode = StrassenMode::Cartesian);

  bool redundant(const SubsetFamily& family) const;

  std::size_t num_candidates() const { return certs_.size(); }

 private:
  Dims dims_;
  CoherenceRelation rel_;
  std::vector<BinaryVector> certs_;  // sorted by popcount, descending
  std::vector<std::size_t> counts_;
  std::vector<BinaryVector> sets_;
};

/// One-shot form of Prop1Searcher(dims).redundant(family).
bool prop1_redundant(const SubsetFamily& family, const Dims& dims);

/// A product of point masses: stratum a for p', and per arm z the cell
/// (x_z, a_{x_z}).
struct Vertex {
  std::size_t stratum = 0;
  std::vector<int> treatment;  // x_z per arm, 1-based

  /// Coordinates (p', p_1, ..., p_Q) as 0/1 entries.
  std::vector<int> point(const Dims& dims) const;
};

inline constexpr std::size_t kVertexCap = 1'000'000;

/// All M^K * K^Q vertices, stratum-major then arms in odometer order.
std::vector<Vertex> enumerate_vertices(const Dims& dims);

enum class AuditVerdict { Nonredundant, Redundant };

struct AuditEntry {
  std::size_t row_id = 0;  // (z - 1) * rows_per_arm + per-arm index
  int arm = 1;
  SubsetFamily family;
  AuditVerdict verdict = AuditVerdict::Redundant;
  Rational max_violation;
};

struct AuditReport {
  Dims dims;
  std::vector<AuditEntry> entries;

  /// True iff the verdicts coincide with the rows' nonredundant tags.
  bool matches_tags(const InequalitySystem& sys) const;
};

inline constexpr std::size_t kAuditRowCap = 5000;

/// For each row of every arm, maximizes lhs.p' - rhs.p_z over the polytope cut
/// out by the remaining nonredundant rows of `sys` (all arms) and the simplex
/// constraints. Exact LP; a positive maximum means the row cuts something off.
/// Q is taken from sys.dims.
AuditReport lp_redundancy_audit(const InequalitySystem& sys);

/// `[{row_id, family, verdict, max_violation}]`, max_violation as "p/q".
std::string audit_to_json(const AuditReport& report);

struct VertexPolytopeReport {
  std::size_t vertices = 0;
  std::size_t ambient_dim = 0;
  std::size_t affine_dim = 0;
  bool vertices_satisfy_rows = false;
  std::size_t rows = 0;
  std::size_t facet_rows = 0;  // rows tight on affine_dim affinely independent vertices
  std::size_t hull_facets = 0;
  std::size_t hull_facets_implied = 0;  // hull facets implied by the inequality system
  bool affine_hull_implied = false;     // system forces the affine hull's equations
  bool ok() const {
    return vertices_satisfy_rows && facet_rows == rows && hull_facets_implied == hull_facets &&
           affine_hull_implied;
  }
};

/// Exact comparison of conv(vertices) with the nonredundant system for dims.
/// The hull's facets are found by brute force over affinely independent
/// vertex subsets, so keep this to tiny dims.
VertexPolytopeReport verify_vertex_polytope(const Dims& dims);

}  // namespace ivbounds
