#include "ivbounds/polytope_oracle.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>

#include "ivbounds/simplex.hpp"
#include "json.hpp"

namespace ivbounds {

namespace {

using RMatrix = std::vector<std::vector<Rational>>;

// Reduced row echelon form in place; returns the pivot columns.
std::vector<std::size_t> rref(RMatrix& a) {
  std::vector<std::size_t> pivots;
  if (a.empty()) return pivots;
  const std::size_t cols = a[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < a.size(); ++c) {
    std::size_t p = r;
    while (p < a.size() && a[p][c] == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[r]);
    const Rational inv = Rational(1) / a[r][c];
    for (auto& v : a[r]) v *= inv;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i == r || a[i][c] == 0) continue;
      const Rational f = a[i][c];
      for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

// Basis of {v : a v = 0}.
RMatrix nullspace(RMatrix a, std::size_t cols) {
  const auto pivots = rref(a);
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  RMatrix basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -a[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

std::size_t affine_rank(const std::vector<std::vector<int>>& pts) {
  if (pts.size() <= 1) return 0;
  RMatrix diff;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    std::vector<Rational> row(pts[i].size());
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = pts[i][j] - pts[0][j];
    diff.push_back(std::move(row));
  }
  return rref(diff).size();
}

std::size_t checked_count(std::size_t base, int exp, std::size_t cap, const char* what) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > cap / base) throw Error(ErrorKind::SizeOverflow, std::string(what) + " exceeds cap");
    r *= base;
  }
  return r;
}

std::vector<Rational> exact_distribution(std::span<const double> p) {
  std::vector<Rational> q;
  q.reserve(p.size());
  Rational sum = 0;
  for (double v : p) {
    if (!(v >= 0.0)) throw Error(ErrorKind::DomainError, "probabilities must be nonnegative");
    q.push_back(to_rational(v));
    sum += q.back();
  }
  if (sum == 0) throw Error(ErrorKind::DomainError, "distribution has zero mass");
  for (auto& v : q) v /= sum;
  return q;
}

// Variables (p', p_1, ..., p_Q); rows H'p' - H p_z <= 0 for every row of `rows`
// except `skip` (flat row id), plus the simplex equalities.
LinearProgram<Rational> joint_program(const Dims& d, const std::vector<const InequalityRow*>& rows,
                                      std::size_t skip) {
  const std::size_t S = d.strata();
  const std::size_t C = d.cells();
  const std::size_t n = S + static_cast<std::size_t>(d.Q) * C;
  LinearProgram<Rational> lp(n);
  for (int z = 0; z < d.Q; ++z) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<std::size_t>(z) * rows.size() + r == skip) continue;
      std::vector<Rational> c(n, Rational(0));
      for (auto s : rows[r]->lhs.support()) c[s] = 1;
      for (auto cell : rows[r]->rhs.support()) c[S + static_cast<std::size_t>(z) * C + cell] = -1;
      lp.add_row(std::move(c), RowSense::LessEqual, Rational(0));
    }
  }
  std::vector<Rational> c(n, Rational(0));
  for (std::size_t s = 0; s < S; ++s) c[s] = 1;
  lp.add_row(c, RowSense::Equal, Rational(1));
  for (int z = 0; z < d.Q; ++z) {
    std::fill(c.begin(), c.end(), Rational(0));
    for (std::size_t k = 0; k < C; ++k) c[S + static_cast<std::size_t>(z) * C + k] = 1;
    lp.add_row(c, RowSense::Equal, Rational(1));
  }
  return lp;
}

Rational maximize(LinearProgram<Rational> lp, const std::vector<Rational>& objective) {
  for (std::size_t j = 0; j < objective.size(); ++j) lp.objective[j] = -objective[j];
  const auto res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) {
    throw Error(ErrorKind::LpFailure, std::string("exact LP ended with status ") + to_string(res.status));
  }
  return -res.objective;
}

}  // namespace

bool CoherenceRelation::contains(std::size_t stratum, std::size_t cell) const {
  const auto c = cell_from_flat(dims, cell);
  return stratum_outcome(dims, stratum, c.x) == c.y;
}

CoherenceRelation build_coherence(const Dims& dims) {
  CoherenceRelation rel;
  rel.dims = dims;
  for (std::size_t a = 0; a < dims.strata(); ++a) {
    for (int x = 1; x <= dims.K; ++x) {
      rel.edge_stratum.push_back(a);
      rel.edge_cell.push_back(cell_flat(dims, {x, stratum_outcome(dims, a, x)}));
    }
  }
  return rel;
}

BinaryVector cartesian_set(const Dims& dims, const SubsetFamily& family) {
  if (family.masks.size() != static_cast<std::size_t>(dims.K)) {
    throw Error(ErrorKind::DimensionMismatch, "a family needs exactly K subsets");
  }
  BinaryVector u(dims.strata());
  for (std::size_t a = 0; a < dims.strata(); ++a) {
    bool member = true;
    for (int x = 1; x <= dims.K && member; ++x) {
      member = (family.masks[static_cast<std::size_t>(x - 1)] >> (stratum_outcome(dims, a, x) - 1)) & 1U;
    }
    if (member) u.set(a);
  }
  return u;
}

BinaryVector neighbors(const CoherenceRelation& rel, const BinaryVector& strata) {
  BinaryVector n(rel.dims.cells());
  for (std::size_t e = 0; e < rel.num_edges(); ++e) {
    if (strata.test(rel.edge_stratum[e])) n.set(rel.edge_cell[e]);
  }
  return n;
}

BinaryVector edge_certificate(const CoherenceRelation& rel, const BinaryVector& strata) {
  const BinaryVector n = neighbors(rel, strata);
  BinaryVector r(rel.num_edges());
  for (std::size_t e = 0; e < rel.num_edges(); ++e) {
    const bool in_u = strata.test(rel.edge_stratum[e]);
    const bool in_n = n.test(rel.edge_cell[e]);
    if (in_u == in_n) r.set(e);
  }
  return r;
}

bool strassen_feasible(const Dims& dims, std::span<const double> pA, std::span<const double> pB,
                       StrassenMode mode) {
  if (pA.size() != dims.strata() || pB.size() != dims.cells()) {
    throw Error(ErrorKind::DimensionMismatch, "distribution lengths do not match dims");
  }
  const auto a = exact_distribution(pA);
  const auto b = exact_distribution(pB);
  const auto rel = build_coherence(dims);
  auto check = [&](const BinaryVector& u) {
    Rational lhs = 0;
    for (auto s : u.support()) lhs += a[s];
    Rational rhs = 0;
    for (auto c : neighbors(rel, u).support()) rhs += b[c];
    return lhs <= rhs;
  };

  if (mode == StrassenMode::AllSubsets) {
    const std::size_t S = dims.strata();
    if (S > kAllSubsetsMaxStrata) throw Error(ErrorKind::SizeOverflow, "all-subsets check needs M^K <= 20");
    const std::uint64_t last = (std::uint64_t{1} << S) - 1;
    for (std::uint64_t bits = 1; bits < last; ++bits) {
      BinaryVector u(S);
      for (std::size_t s = 0; s < S; ++s) {
        if ((bits >> s) & 1U) u.set(s);
      }
      if (!check(u)) return false;
    }
    return true;
  }
  const auto sys = enumerate_full(Dims::make(1, dims.K, dims.M));
  return std::all_of(sys.rows.begin(), sys.rows.end(), [&](const InequalityRow& r) { return check(r.lhs); });
}

Prop1Searcher::Prop1Searcher(const Dims& dims, StrassenMode mode) : dims_(dims), rel_(build_coherence(dims)) {
  if (mode == StrassenMode::AllSubsets) {
    if (dims.K != 2 || dims.M != 2) throw Error(ErrorKind::SizeOverflow, "all-subsets candidates need K = M = 2");
    const std::size_t S = dims.strata();
    for (std::uint64_t bits = 1; bits + 1 < (std::uint64_t{1} << S); ++bits) {
      BinaryVector u(S);
      for (std::size_t s = 0; s < S; ++s) {
        if ((bits >> s) & 1U) u.set(s);
      }
      sets_.push_back(std::move(u));
    }
  } else {
    const std::uint64_t per = count_inequalities(Dims::make(1, dims.K, dims.M)).total;
    if (per > kProp1CandidateCap) throw Error(ErrorKind::SizeOverflow, "too many Cartesian candidates");
    for (const auto& r : enumerate_full(Dims::make(1, dims.K, dims.M)).rows) sets_.push_back(r.lhs);
  }
  std::vector<std::pair<BinaryVector, BinaryVector>> items;
  items.reserve(sets_.size());
  for (auto& u : sets_) items.emplace_back(edge_certificate(rel_, u), std::move(u));
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& x, const auto& y) { return x.first.count() > y.first.count(); });
  sets_.clear();
  for (auto& [cert, u] : items) {
    counts_.push_back(cert.count());
    certs_.push_back(std::move(cert));
    sets_.push_back(std::move(u));
  }
}

bool Prop1Searcher::redundant(const SubsetFamily& family) const {
  if (!is_valid_family(dims_, family)) throw Error(ErrorKind::InvalidArgument, "invalid family");
  const BinaryVector u = cartesian_set(dims_, family);
  const BinaryVector cert = edge_certificate(rel_, u);
  const std::size_t need = cert.count();
  for (std::size_t i = 0; i < certs_.size() && counts_[i] >= need; ++i) {
    if (cert.is_subset_of(certs_[i]) && !(sets_[i] == u)) return true;
  }
  return false;
}

bool prop1_redundant(const SubsetFamily& family, const Dims& dims) { return Prop1Searcher(dims).redundant(family); }

std::vector<int> Vertex::point(const Dims& dims) const {
  const std::size_t S = dims.strata();
  const std::size_t C = dims.cells();
  std::vector<int> p(S + treatment.size() * C, 0);
  p[stratum] = 1;
  for (std::size_t z = 0; z < treatment.size(); ++z) {
    const int x = treatment[z];
    p[S + z * C + cell_flat(dims, {x, stratum_outcome(dims, stratum, x)})] = 1;
  }
  return p;
}

std::vector<Vertex> enumerate_vertices(const Dims& dims) {
  const std::size_t per = checked_count(static_cast<std::size_t>(dims.K), dims.Q, kVertexCap, "vertex count");
  if (dims.strata() > kVertexCap / per) throw Error(ErrorKind::SizeOverflow, "vertex count exceeds cap");
  std::vector<Vertex> out;
  out.reserve(dims.strata() * per);
  for (std::size_t a = 0; a < dims.strata(); ++a) {
    std::vector<int> x(static_cast<std::size_t>(dims.Q), 1);
    for (std::size_t k = 0; k < per; ++k) {
      out.push_back(Vertex{a, x});
      for (int z = dims.Q - 1; z >= 0; --z) {
        if (++x[static_cast<std::size_t>(z)] <= dims.K) break;
        x[static_cast<std::size_t>(z)] = 1;
      }
    }
  }
  return out;
}

bool AuditReport::matches_tags(const InequalitySystem& sys) const {
  const std::size_t per = sys.rows.size();
  if (entries.size() != per * static_cast<std::size_t>(dims.Q)) return false;
  for (const auto& e : entries) {
    const bool tagged = sys.rows[e.row_id % per].tag == RowTag::Nonredundant;
    if (tagged != (e.verdict == AuditVerdict::Nonredundant)) return false;
  }
  return true;
}

AuditReport lp_redundancy_audit(const InequalitySystem& sys) {
  const Dims& d = sys.dims;
  const std::size_t per = sys.rows.size();
  if (per * static_cast<std::size_t>(d.Q) > kAuditRowCap) {
    throw Error(ErrorKind::SizeOverflow, "audit is limited to 5000 rows");
  }
  std::vector<const InequalityRow*> kept;
  std::vector<std::size_t> kept_index(per, per);
  for (std::size_t r = 0; r < per; ++r) {
    if (sys.rows[r].tag == RowTag::Nonredundant) {
      kept_index[r] = kept.size();
      kept.push_back(&sys.rows[r]);
    }
  }
  const std::size_t S = d.strata();
  const std::size_t C = d.cells();
  AuditReport report;
  report.dims = d;
  for (int z = 0; z < d.Q; ++z) {
    for (std::size_t r = 0; r < per; ++r) {
      const auto& row = sys.rows[r];
      const std::size_t skip = kept_index[r] == per ? static_cast<std::size_t>(-1)
                                                    : static_cast<std::size_t>(z) * kept.size() + kept_index[r];
      auto lp = joint_program(d, kept, skip);
      std::vector<Rational> obj(lp.num_vars, Rational(0));
      for (auto s : row.lhs.support()) obj[s] = 1;
      for (auto c : row.rhs.support()) obj[S + static_cast<std::size_t>(z) * C + c] = -1;
      AuditEntry e;
      e.row_id = static_cast<std::size_t>(z) * per + r;
      e.arm = z + 1;
      e.family = row.family;
      e.max_violation = maximize(std::move(lp), obj);
      e.verdict = e.max_violation > 0 ? AuditVerdict::Nonredundant : AuditVerdict::Redundant;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

std::string audit_to_json(const AuditReport& report) {
  auto arr = nlohmann::json::array();
  for (const auto& e : report.entries) {
    arr.push_back({{"row_id", e.row_id},
                   {"arm", e.arm},
                   {"family", to_string(e.family)},
                   {"verdict", e.verdict == AuditVerdict::Nonredundant ? "nonredundant" : "redundant"},
                   {"max_violation", to_string(e.max_violation)}});
  }
  return arr.dump();
}

VertexPolytopeReport verify_vertex_polytope(const Dims& d) {
  const auto sys = nonredundant_system(d);
  const auto verts = enumerate_vertices(d);
  const std::size_t S = d.strata();
  const std::size_t C = d.cells();
  std::vector<std::vector<int>> pts;
  for (const auto& v : verts) pts.push_back(v.point(d));

  VertexPolytopeReport rep;
  rep.vertices = pts.size();
  rep.ambient_dim = pts.empty() ? 0 : pts[0].size();
  rep.affine_dim = affine_rank(pts);
  rep.rows = sys.rows.size() * static_cast<std::size_t>(d.Q);

  // Row slack at a vertex; the vertices are 0/1 so integers are exact.
  auto slack = [&](const InequalityRow& row, int z, const std::vector<int>& p) {
    int lhs = 0;
    int rhs = 0;
    for (auto s : row.lhs.support()) lhs += p[s];
    for (auto c : row.rhs.support()) rhs += p[S + static_cast<std::size_t>(z) * C + c];
    return rhs - lhs;
  };
  rep.vertices_satisfy_rows = true;
  for (int z = 0; z < d.Q; ++z) {
    for (const auto& row : sys.rows) {
      std::vector<std::vector<int>> tight;
      for (const auto& p : pts) {
        const int s = slack(row, z, p);
        if (s < 0) rep.vertices_satisfy_rows = false;
        if (s == 0) tight.push_back(p);
      }
      if (!tight.empty() && affine_rank(tight) + 1 == rep.affine_dim) ++rep.facet_rows;
    }
  }

  std::vector<const InequalityRow*> rows;
  for (const auto& r : sys.rows) rows.push_back(&r);
  const auto base = joint_program(d, rows, static_cast<std::size_t>(-1));

  // Affine hull equations a.x = -beta, from the nullspace of [x | 1].
  RMatrix lifted;
  for (const auto& p : pts) {
    std::vector<Rational> row(p.begin(), p.end());
    row.emplace_back(1);
    lifted.push_back(std::move(row));
  }
  const auto eqs = nullspace(lifted, rep.ambient_dim + 1);
  rep.affine_hull_implied = true;
  for (const auto& eq : eqs) {
    std::vector<Rational> a(eq.begin(), eq.end() - 1);
    std::vector<Rational> neg(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) neg[j] = -a[j];
    const Rational target = -eq.back();
    if (maximize(base, a) != target || -maximize(base, neg) != target) rep.affine_hull_implied = false;
  }

  // Coordinates that parametrize the affine hull.
  RMatrix diff;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    std::vector<Rational> row(rep.ambient_dim);
    for (std::size_t j = 0; j < rep.ambient_dim; ++j) row[j] = pts[i][j] - pts[0][j];
    diff.push_back(std::move(row));
  }
  const auto coords = rref(diff);
  const std::size_t dim = coords.size();
  std::vector<std::vector<Rational>> proj;
  for (const auto& p : pts) {
    std::vector<Rational> q;
    for (auto c : coords) q.emplace_back(p[c]);
    proj.push_back(std::move(q));
  }

  // Hyperplanes through dim affinely independent vertices with every vertex on
  // one side are exactly the hull's facets.
  std::set<std::vector<Rational>> facets;
  std::vector<std::size_t> idx(dim);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t n = proj.size();
  while (dim > 0 && dim <= n) {
    RMatrix m;
    for (auto i : idx) {
      std::vector<Rational> row = proj[i];
      row.emplace_back(1);
      m.push_back(std::move(row));
    }
    const auto ns = nullspace(m, dim + 1);
    if (ns.size() == 1) {
      auto h = ns[0];  // h[0..dim) . x + h[dim] = 0 on the subset
      int sign = 0;
      bool ok = true;
      for (const auto& q : proj) {
        Rational v = h[dim];
        for (std::size_t j = 0; j < dim; ++j) v += h[j] * q[j];
        const int sv = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (sv == 0) continue;
        if (sign == 0) sign = sv;
        if (sv != sign) {
          ok = false;
          break;
        }
      }
      if (ok && sign != 0) {
        // Orient as h.x + h0 <= 0 and scale the first nonzero entry to +-1.
        if (sign > 0) {
          for (auto& v : h) v = -v;
        }
        auto nz = std::find_if(h.begin(), h.end(), [](const Rational& v) { return v != 0; });
        const Rational scale = *nz < 0 ? Rational(-*nz) : *nz;
        for (auto& v : h) v /= scale;
        facets.insert(std::move(h));
      }
    }
    std::size_t i = dim;
    while (i > 0 && idx[i - 1] == n - dim + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t k = i; k < dim; ++k) idx[k] = idx[k - 1] + 1;
  }

  rep.hull_facets = facets.size();
  for (const auto& h : facets) {
    std::vector<Rational> obj(rep.ambient_dim, Rational(0));
    for (std::size_t j = 0; j < dim; ++j) obj[coords[j]] = h[j];
    if (maximize(base, obj) + h[dim] <= 0) ++rep.hull_facets_implied;
  }
  return rep;
}

}  // namespace ivbounds
