// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "ivbounds/bounds.hpp"
#include "ivbounds/chernoff.hpp"
#include "ivbounds/kl_inference.hpp"
#include "ivbounds/polytope_oracle.hpp"
#include "ivbounds/random.hpp"
#include "oracles.hpp"

using namespace ivbounds;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void expect(bool cond, const std::string& what) {
    if (!cond) ok = false;
    notes.push_back(std::string(cond ? "ok   " : "MISS ") + what);
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double got, double want, double tol) { return std::abs(got - want) <= tol; }

struct Reference {
  const char* label;
  double lo, hi;
};

// Criterion 1.
Check counting() {
  Check c;
  const auto t0 = Clock::now();
  const std::vector<std::tuple<int, int, std::uint64_t>> bold{
      {2, 2, 8},   {2, 3, 42},   {2, 4, 204},  {2, 5, 910},  {2, 6, 3856}, {3, 2, 26},
      {3, 3, 333}, {3, 4, 3344}, {4, 2, 80},   {4, 3, 2388}, {5, 2, 242}};
  for (auto [K, M, want] : bold) {
    const Dims d = Dims::make(1, K, M);
    const auto closed = count_inequalities(d).nonredundant;
    const auto listed = nonredundant_system(d).rows.size();
    c.expect(closed == want && listed == want,
             fmt("K=%d M=%d: closed form %llu, enumerated %zu, table %llu", K, M,
                 static_cast<unsigned long long>(closed), listed, static_cast<unsigned long long>(want)));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, fmt("runtime %.2f s (limit 10 s)", secs));
  return c;
}

Dataset minneapolis() { return read_dataset(oracle::fixture("minneapolis.csv")); }

std::vector<LinearFunctional> ates(const Dims& d) {
  return {LinearFunctional::ate(d, 2, 1, 2), LinearFunctional::ate(d, 3, 1, 2), LinearFunctional::ate(d, 3, 2, 2)};
}

// Criterion 2.
Check plugin_r1() {
  Check c;
  const Dataset ds = minneapolis();
  const auto obs = empirical_distributions(ds);
  const std::vector<Reference> expected{{"ate(Adv,Arr,2)", 0.019, 0.252}, {"ate(Sep,Arr,2)", 0.057, 0.343},
                                 {"ate(Sep,Adv,2)", -0.184, 0.312}};
  const auto fs = ates(ds.dims());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto t0 = Clock::now();
    const auto sys = nonredundant_system(ds.dims());
    const auto r = plugin_bounds(sys, obs, fs[i]);
    const double secs = seconds_since(t0);
    c.expect(within(r.lower, expected[i].lo, 1e-3) && within(r.upper, expected[i].hi, 1e-3) && secs < 2.0,
             fmt("%s = (%.4f, %.4f), expected (%.3f, %.3f), %.3f s", expected[i].label, r.lower, r.upper, expected[i].lo,
                 expected[i].hi, secs));
  }
  return c;
}

// Criterion 3.
Check ci_r1() {
  Check c;
  const Dataset ds = minneapolis();
  const auto obs = empirical_distributions(ds);
  const auto sys = nonredundant_system(ds.dims());
  const std::vector<Reference> expected{{"ate(Adv,Arr,2)", -0.374, 0.633}, {"ate(Sep,Arr,2)", -0.346, 0.702},
                                 {"ate(Sep,Adv,2)", -0.583, 0.683}};
  ChernoffSpec spec{static_cast<int>(ds.dims().cells()), {}, 0.05};
  for (const auto& o : obs) spec.arm_sizes.push_back(o.n);
  const auto cv = find_t_alpha(spec);
  c.notes.push_back(fmt("info t_0.05 = %.6f, lambda* = %.4f", cv.t_alpha, cv.lambda_star));
  const auto fs = ates(ds.dims());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto t0 = Clock::now();
    const std::vector<LinearFunctional> one{fs[i]};
    const auto rep = confidence_intervals_at(sys, obs, one, cv.t_alpha, 0.05);
    const double secs = seconds_since(t0);
    const auto& ci = rep.intervals[0];
    c.expect(within(ci.lower, expected[i].lo, 0.01) && within(ci.upper, expected[i].hi, 0.01) && secs < 30.0,
             fmt("%s = (%.4f, %.4f), expected (%.3f, %.3f), %.3f s", expected[i].label, ci.lower, ci.upper, expected[i].lo,
                 expected[i].hi, secs));
  }
  return c;
}

// Criterion 4.
Check plugin_r4() {
  Check c;
  const Dataset ds = minneapolis();
  const char* arm[] = {"Arr", "Adv", "Sep"};
  const std::vector<std::vector<Reference>> expected{
      {{"ate(Adv,Arr,2)", -0.675, 0.317}, {"ate(Sep,Arr,2)", -0.637, 0.407}, {"ate(Sep,Adv,2)", -0.184, 0.312}},
      {{"ate(Adv,Arr,2)", -0.111, 0.856}, {"ate(Sep,Arr,2)", 0.057, 0.343}, {"ate(Sep,Adv,2)", -0.788, 0.442}},
      {{"ate(Adv,Arr,2)", 0.019, 0.252}, {"ate(Sep,Arr,2)", -0.092, 0.864}, {"ate(Sep,Adv,2)", -0.403, 0.866}}};
  for (int z = 1; z <= 3; ++z) {
    const Dataset sub = drop_arm(ds, z);
    const auto obs = empirical_distributions(sub);
    const auto sys = nonredundant_system(sub.dims());
    const auto fs = ates(sub.dims());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const auto r = plugin_bounds(sys, obs, fs[i]);
      const auto& p = expected[static_cast<std::size_t>(z - 1)][i];
      c.expect(within(r.lower, p.lo, 1e-3) && within(r.upper, p.hi, 1e-3),
               fmt("drop Z=%s %s = (%.4f, %.4f), expected (%.3f, %.3f)", arm[z - 1], p.label, r.lower, r.upper, p.lo,
                   p.hi));
    }
  }
  return c;
}

// Criterion 5.
Check fixtures() {
  Check c;
  const Dims d = Dims::make(2, 2, 3);
  const auto sys = nonredundant_system(d);
  const auto s2 = empirical_distributions(read_dataset(oracle::fixture("table_s2.csv")));
  const auto s3 = empirical_distributions(read_dataset(oracle::fixture("table_s3.csv")));
  c.expect(falsify(sys, s2) == Feasibility::Infeasible, fmt("table_s2.csv: %s", to_string(falsify(sys, s2))));
  c.expect(falsify(sys, s3) == Feasibility::Feasible, fmt("table_s3.csv: %s", to_string(falsify(sys, s3))));
  const auto m11 = LinearFunctional::marginal(d, 1, 1);
  const auto m12 = LinearFunctional::marginal(d, 1, 2);
  const auto m13 = LinearFunctional::marginal(d, 1, 3);
  std::vector<double> sum(d.strata()), diff(d.strata());
  for (std::size_t s = 0; s < d.strata(); ++s) {
    sum[s] = m11.coeffs[s] + m12.coeffs[s];
    diff[s] = m11.coeffs[s] - m13.coeffs[s];
  }
  const std::vector<std::pair<LinearFunctional, Reference>> rows{
      {LinearFunctional::stratum(d, {2, 1}), {"P(Y(x1)=2,Y(x2)=1)", 0.01, 0.36}},
      {LinearFunctional::marginal(d, 2, 1), {"P(Y(x2)=1)", 0.26, 0.78}},
      {LinearFunctional::raw(d, sum), {"P(Y(x1)=1)+P(Y(x1)=2)", 0.56, 0.70}},
      {LinearFunctional::raw(d, diff), {"P(Y(x1)=1)-P(Y(x1)=3)", -0.32, -0.04}}};
  for (const auto& [f, p] : rows) {
    const auto r = plugin_bounds(sys, s3, f);
    c.expect(within(r.lower, p.lo, 5e-3) && within(r.upper, p.hi, 5e-3),
             fmt("%s = [%.4f, %.4f], expected [%.2f, %.2f]", p.label, r.lower, r.upper, p.lo, p.hi));
  }
  return c;
}

// Criterion 6.
Check oracle_equivalence() {
  Check c;
  for (int K = 2; K <= 4; ++K) {
    for (int M = 2; M <= 4; ++M) {
      const Dims d = Dims::make(1, K, M);
      const Prop1Searcher searcher(d);
      std::size_t families = 0, agree = 0;
      for (const auto& r : enumerate_full(d).rows) {
        ++families;
        agree += searcher.redundant(r.family) == !is_nonredundant_family(d, r.family);
      }
      c.expect(agree == families, fmt("K=%d M=%d: %zu/%zu families agree", K, M, agree, families));
    }
  }
  for (const Dims& d : {Dims::make(1, 2, 2), Dims::make(1, 2, 3), Dims::make(2, 3, 2)}) {
    const auto sys = enumerate_full(d);
    const auto rep = lp_redundancy_audit(sys);
    std::size_t kept = 0;
    for (const auto& e : rep.entries) kept += e.verdict == AuditVerdict::Nonredundant;
    c.expect(rep.matches_tags(sys) && kept == count_inequalities(d).nonredundant,
             fmt("LP audit (K=%d,M=%d,Q=%d): %zu of %zu rows non-redundant, expected %llu", d.K, d.M, d.Q, kept,
                 rep.entries.size(), static_cast<unsigned long long>(count_inequalities(d).nonredundant)));
  }
  return c;
}

// Criterion 7.
Check vertex_polytope() {
  Check c;
  for (int Q : {1, 2}) {
    const auto r = verify_vertex_polytope(Dims::make(Q, 2, 2));
    c.expect(r.ok(), fmt("Q=%d: %zu vertices, affine dim %zu, %zu/%zu rows facet-defining, %zu/%zu hull facets implied, "
                         "vertices feasible %s, affine hull implied %s",
                         Q, r.vertices, r.affine_dim, r.facet_rows, r.rows, r.hull_facets_implied, r.hull_facets,
                         r.vertices_satisfy_rows ? "yes" : "no", r.affine_hull_implied ? "yes" : "no"));
  }
  return c;
}

// Criterion 8.
Check strassen() {
  Check c;
  const Dims d = Dims::make(1, 2, 2);
  const auto rel = build_coherence(d);
  Rng rng(2024);
  std::size_t agree = 0, oracle_agree = 0, feasible = 0;
  constexpr int kPairs = 1000;
  for (int rep = 0; rep < kPairs; ++rep) {
    std::vector<double> pA, pB;
    if (rep % 3 == 0) {
      pA = dirichlet_flat(rng, d.strata());
      pB = dirichlet_flat(rng, d.cells());
    } else {
      const auto w = dirichlet_flat(rng, rel.num_edges());
      pA.assign(d.strata(), 0.0);
      pB.assign(d.cells(), 0.0);
      for (std::size_t e = 0; e < rel.num_edges(); ++e) {
        pA[rel.edge_stratum[e]] += w[e];
        pB[rel.edge_cell[e]] += w[e];
      }
      if (rep % 3 == 2) {
        const auto noise = dirichlet_flat(rng, d.cells());
        for (std::size_t k = 0; k < pB.size(); ++k) pB[k] = 0.95 * pB[k] + 0.05 * noise[k];
      }
    }
    const bool cart = strassen_feasible(d, pA, pB, StrassenMode::Cartesian);
    const bool all = strassen_feasible(d, pA, pB, StrassenMode::AllSubsets);
    agree += cart == all;
    oracle_agree += cart == oracle::coupling_exists(d, pA, pB);
    feasible += all;
  }
  c.expect(agree == kPairs, fmt("Cartesian vs all subsets: %zu/%d agree (%zu feasible)", agree, kPairs, feasible));
  c.expect(oracle_agree == kPairs, fmt("Cartesian vs coupling LP: %zu/%d agree", oracle_agree, kPairs));
  return c;
}

// Criterion 9.
Check inference_properties() {
  Check c;
  constexpr std::size_t kDraws = 10'000;
  constexpr std::uint64_t kSeed = 20240601;
  std::vector<double> prop;
  for (int Q = 1; Q <= 8; ++Q) prop.push_back(simulate_falsification(Dims::make(Q, 2, 2), kDraws, kSeed).proportion);
  std::string curve;
  for (std::size_t i = 0; i < prop.size(); ++i) curve += fmt("%sQ=%zu:%.4f", i ? " " : "", i + 1, prop[i]);
  c.expect(prop[0] == 0.0, fmt("Q=1 proportion %.4f", prop[0]));
  bool increasing = true;
  for (std::size_t i = 2; i < prop.size(); ++i) increasing = increasing && prop[i] > prop[i - 1];
  c.expect(increasing, "strictly increasing from Q=2 to Q=8: " + curve);

  Rng rng(7);
  const Dims d = Dims::make(2, 2, 2);
  const auto truth = random_truth(d, rng);
  const std::vector<LinearFunctional> fs{LinearFunctional::ate(d, 2, 1, 2), LinearFunctional::marginal(d, 1, 1),
                                         LinearFunctional::stratum(d, {1, 2})};
  const std::vector<std::uint64_t> n{50, 50};
  const auto t0 = Clock::now();
  const auto cov = coverage_monte_carlo(truth, fs, n, 0.10, 500, 99);
  c.expect(cov.coverage >= 0.90, fmt("simultaneous coverage %.3f over %zu reps (t_alpha %.4f, %.1f s)", cov.coverage,
                                     cov.reps, cov.t_alpha, seconds_since(t0)));
  return c;
}

// Criterion 10.
Check chernoff() {
  Check c;
  const ChernoffSpec mn{6, {92, 108, 114}, 0.05};
  c.expect(tail_rhs(mn, 0.0) == 1.0, fmt("tail_rhs(t=0) = %.17g", tail_rhs(mn, 0.0)));
  ChernoffSpec one = mn;
  one.alpha = 1.0;
  c.expect(find_t_alpha(one).t_alpha == 0.0, fmt("t_alpha(alpha=1) = %.17g", find_t_alpha(one).t_alpha));
  double worst = 0.0;
  for (int j = 0; j <= 1000; ++j) {
    const double l = j / 1000.0;
    worst = std::max(worst, std::abs(g_polynomial(2, 1, l) - (1 + l)));
    worst = std::max(worst, std::abs(g_polynomial(2, 2, l) - (1 + l + 0.5 * l * l)));
  }
  c.expect(worst <= 1e-12, fmt("d=2 G vs expansions: max error %.3g", worst));
  for (const std::vector<std::uint64_t>& n : {std::vector<std::uint64_t>{92, 108, 114},
                                              std::vector<std::uint64_t>{92, 108, 113}}) {
    const ChernoffSpec s{6, n, 0.05};
    const auto cv = find_t_alpha(s);
    const double ref = oracle::t_alpha_grid(6, n, 0.05);
    c.expect(within(cv.t_alpha, ref, 1e-4), fmt("n=(%llu,%llu,%llu): t_0.05 = %.6f, grid oracle %.6f",
                                                 static_cast<unsigned long long>(n[0]),
                                                 static_cast<unsigned long long>(n[1]),
                                                 static_cast<unsigned long long>(n[2]), cv.t_alpha, ref));
  }
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"inequality counts", counting},
      {"Minneapolis plug-in bounds, all data", plugin_r1},
      {"Minneapolis 95% confidence intervals, all data", ci_r1},
      {"Minneapolis plug-in bounds, one instrument arm dropped", plugin_r4},
      {"falsification fixtures and sharp bounds", fixtures},
      {"redundancy oracles", oracle_equivalence},
      {"vertex set versus inequality system", vertex_polytope},
      {"Cartesian versus all-subset coupling check", strassen},
      {"falsification rate and coverage", inference_properties},
      {"Chernoff bound machinery", chernoff},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.notes.push_back(std::string("MISS threw: ") + e.what());
    }
    failed += !c.ok;
    std::printf("%s criterion %2zu: %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first);
    for (const auto& n : c.notes) std::printf("        %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
