#include "doctest.h"
#include "ivbounds/random.hpp"
#include "ivbounds/rational.hpp"
#include "ivbounds/simplex.hpp"

using namespace ivbounds;

TEST_CASE("small LP") {
  // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3.
  LinearProgram<double> lp(2);
  lp.objective = {-3, -2};
  lp.add_row({1, 1}, RowSense::LessEqual, 4);
  lp.add_row({1, 3}, RowSense::LessEqual, 6);
  lp.add_row({1, 0}, RowSense::LessEqual, 3);
  const auto r = solve_lp(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-11));
  CHECK(r.x[0] == doctest::Approx(3));
  CHECK(r.x[1] == doctest::Approx(1));
}

TEST_CASE("infeasible and unbounded") {
  LinearProgram<double> a(2);
  a.add_row({1, 1}, RowSense::LessEqual, 1);
  a.add_row({1, 1}, RowSense::GreaterEqual, 2);
  CHECK(solve_lp(a).status == LpStatus::Infeasible);

  LinearProgram<double> b(2);
  b.objective = {-1, 0};
  b.add_row({1, -1}, RowSense::LessEqual, 1);
  CHECK(solve_lp(b).status == LpStatus::Unbounded);
}

TEST_CASE("exact arithmetic") {
  LinearProgram<Rational> lp(2);
  lp.objective = {Rational(-1), Rational(-1)};
  lp.add_row({Rational(3), Rational(1)}, RowSense::LessEqual, Rational(1));
  lp.add_row({Rational(1), Rational(3)}, RowSense::LessEqual, Rational(1));
  const auto r = solve_lp(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Rational(-1, 2));
  CHECK(r.x[0] == Rational(1, 4));
  CHECK(to_string(Rational(-1, 2)) == "-1/2");
  CHECK(to_rational(0.375) == Rational(3, 8));
}

TEST_CASE("equality rows and degenerate problems") {
  LinearProgram<double> lp(3);
  lp.objective = {1, 2, 3};
  lp.add_row({1, 1, 1}, RowSense::Equal, 1);
  lp.add_row({1, 1, 0}, RowSense::LessEqual, 1);
  lp.add_row({1, 0, 0}, RowSense::LessEqual, 0);
  const auto r = solve_lp(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(2));
}

TEST_CASE("appending rows and re-optimizing matches a fresh solve") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5;
    LinearProgram<double> lp(n);
    for (auto& c : lp.objective) c = rng.uniform() * 2 - 1;
    lp.add_row(std::vector<double>(n, 1.0), RowSense::Equal, 1.0);
    Simplex<double> s(lp);
    auto r = s.solve();
    REQUIRE(r.status == LpStatus::Optimal);
    for (int k = 0; k < 4; ++k) {
      std::vector<double> row(n);
      for (auto& v : row) v = rng.uniform();
      const double rhs = 0.3 + 0.4 * rng.uniform();
      s.append_row(row, RowSense::LessEqual, rhs);
      lp.add_row(row, RowSense::LessEqual, rhs);
      r = s.reoptimize();
      const auto fresh = solve_lp(lp);
      REQUIRE(r.status == fresh.status);
      if (fresh.status != LpStatus::Optimal) break;
      CHECK(r.objective == doctest::Approx(fresh.objective).epsilon(1e-9));
    }
  }
}
