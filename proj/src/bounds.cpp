#include "ivbounds/bounds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ivbounds/random.hpp"

namespace ivbounds {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError, "bad coefficient '" + s + "'");
  }
  return v;
}

void check_level(int v, int max, const char* what) {
  if (v < 1 || v > max) throw Error(ErrorKind::DomainError, std::string(what) + " level out of range");
}

void check_observed(const Dims& dims, std::span<const ObservedDistribution> observed) {
  if (observed.empty()) throw Error(ErrorKind::DimensionMismatch, "need at least one observed arm");
  for (const auto& o : observed) {
    if (o.probs.size() != dims.cells()) {
      throw Error(ErrorKind::DimensionMismatch, "observed distribution length differs from K*M");
    }
  }
}

Feasibility feasibility_of(const LinearProgram<double>& lp) {
  const auto res = solve_lp(lp);
  if (res.status == LpStatus::Infeasible) return Feasibility::Infeasible;
  if (res.status != LpStatus::Optimal) {
    throw Error(ErrorKind::LpFailure, std::string("feasibility LP ended with status ") + to_string(res.status));
  }
  return Feasibility::Feasible;
}

}  // namespace

LinearFunctional LinearFunctional::marginal(const Dims& dims, int i, int y) {
  check_level(i, dims.K, "treatment");
  check_level(y, dims.M, "outcome");
  LinearFunctional f;
  f.coeffs.assign(dims.strata(), 0.0);
  for (std::size_t s = 0; s < dims.strata(); ++s) {
    if (stratum_outcome(dims, s, i) == y) f.coeffs[s] = 1.0;
  }
  f.label = "marginal(" + std::to_string(i) + "," + std::to_string(y) + ")";
  return f;
}

LinearFunctional LinearFunctional::ate(const Dims& dims, int i, int j, int y) {
  auto f = marginal(dims, i, y);
  const auto g = marginal(dims, j, y);
  for (std::size_t s = 0; s < f.coeffs.size(); ++s) f.coeffs[s] -= g.coeffs[s];
  f.label = "ate(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(y) + ")";
  return f;
}

LinearFunctional LinearFunctional::stratum(const Dims& dims, const std::vector<int>& outcomes) {
  LinearFunctional f;
  f.coeffs.assign(dims.strata(), 0.0);
  f.coeffs[stratum_flat(dims, std::span<const int>(outcomes))] = 1.0;
  std::ostringstream os;
  os << "stratum(";
  for (std::size_t k = 0; k < outcomes.size(); ++k) os << (k ? "," : "") << outcomes[k];
  os << ')';
  f.label = os.str();
  return f;
}

LinearFunctional LinearFunctional::raw(const Dims& dims, std::vector<double> coeffs) {
  if (coeffs.size() != dims.strata()) {
    throw Error(ErrorKind::DimensionMismatch, "raw functional needs M^K coefficients");
  }
  LinearFunctional f;
  std::ostringstream os;
  os.precision(17);
  os << "raw([";
  for (std::size_t s = 0; s < coeffs.size(); ++s) os << (s ? "," : "") << coeffs[s];
  os << "])";
  f.coeffs = std::move(coeffs);
  f.label = os.str();
  return f;
}

bool LinearFunctional::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
}

LinearFunctional parse_functional(const std::string& text, const Dims& dims, const LevelResolver& resolve) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') {
    throw Error(ErrorKind::ParseError, "functional must look like name(args): '" + text + "'");
  }
  const std::string name = trim(t.substr(0, open));
  const std::string inner = t.substr(open + 1, t.size() - open - 2);

  if (name == "raw") {
    const std::string body = trim(inner);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
      throw Error(ErrorKind::ParseError, "raw() expects a bracketed list");
    }
    std::vector<double> coeffs;
    for (const auto& a : split_args(body.substr(1, body.size() - 2))) coeffs.push_back(parse_double(a));
    return LinearFunctional::raw(dims, std::move(coeffs));
  }

  const auto args = split_args(inner);
  auto arity = [&](std::size_t n) {
    if (args.size() != n) {
      throw Error(ErrorKind::ParseError, name + "() expects " + std::to_string(n) + " arguments");
    }
  };
  std::string label;
  LinearFunctional f;
  if (name == "ate") {
    arity(3);
    f = LinearFunctional::ate(dims, resolve('x', args[0]), resolve('x', args[1]), resolve('y', args[2]));
  } else if (name == "marginal") {
    arity(2);
    f = LinearFunctional::marginal(dims, resolve('x', args[0]), resolve('y', args[1]));
  } else if (name == "stratum") {
    arity(static_cast<std::size_t>(dims.K));
    std::vector<int> ys;
    for (const auto& a : args) ys.push_back(resolve('y', a));
    f = LinearFunctional::stratum(dims, ys);
  } else {
    throw Error(ErrorKind::ParseError, "unknown functional '" + name + "'");
  }
  std::ostringstream os;
  os << name << '(';
  for (std::size_t k = 0; k < args.size(); ++k) os << (k ? "," : "") << args[k];
  os << ')';
  f.label = os.str();
  return f;
}

LinearFunctional parse_functional(const std::string& text, const Dims& dims) {
  return parse_functional(text, dims, [&](char v, const std::string& tok) {
    int level = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), level);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorKind::ParseError, std::string("expected an integer ") + v + " level, got '" + tok + "'");
    }
    return level;
  });
}

LinearFunctional parse_functional(const std::string& text, const Dataset& ds) {
  return parse_functional(text, ds.dims(), [&](char v, const std::string& tok) { return ds.level(v, tok); });
}

const char* to_string(Feasibility f) { return f == Feasibility::Feasible ? "feasible" : "infeasible"; }

LinearProgram<double> plugin_program(const InequalitySystem& sys, std::span<const ObservedDistribution> observed) {
  const Dims& d = sys.dims;
  check_observed(d, observed);
  LinearProgram<double> lp(d.strata());
  for (const auto& obs : observed) {
    for (const auto& row : sys.rows) {
      double rhs = 0.0;
      for (std::size_t c : row.rhs.support()) rhs += obs.probs[c];
      lp.add_row(row.lhs.dense<double>(), RowSense::LessEqual, rhs);
    }
  }
  lp.add_row(std::vector<double>(d.strata(), 1.0), RowSense::Equal, 1.0);
  return lp;
}

BoundsResult plugin_bounds(const InequalitySystem& sys, std::span<const ObservedDistribution> observed,
                           const LinearFunctional& f) {
  if (f.coeffs.size() != sys.dims.strata()) {
    throw Error(ErrorKind::DimensionMismatch, "functional length differs from M^K");
  }
  auto lp = plugin_program(sys, observed);
  BoundsResult out;
  out.functional = f.label;
  out.degenerate_functional = f.is_zero();

  auto run = [&](double sign, double& value, CounterfactualDistribution& witness) -> bool {
    for (std::size_t s = 0; s < f.coeffs.size(); ++s) lp.objective[s] = sign * f.coeffs[s];
    const auto res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) return false;
    if (res.status != LpStatus::Optimal) {
      throw Error(ErrorKind::LpFailure, std::string("bounds LP ended with status ") + to_string(res.status));
    }
    value = sign * res.objective;
    witness.probs = res.x;
    return true;
  };

  double lo = 0.0;
  double hi = 0.0;
  if (!run(1.0, lo, out.witness_lower) || !run(-1.0, hi, out.witness_upper)) {
    out.status = Feasibility::Infeasible;
    out.witness_lower.probs.clear();
    out.witness_upper.probs.clear();
    return out;
  }
  out.status = Feasibility::Feasible;
  out.lower = out.degenerate_functional ? 0.0 : lo;
  out.upper = out.degenerate_functional ? 0.0 : hi;
  return out;
}

Feasibility falsify(const InequalitySystem& sys, std::span<const ObservedDistribution> observed) {
  return feasibility_of(plugin_program(sys, observed));
}

std::size_t helly_subset_size(const Dims& dims) { return dims.strata(); }

Feasibility falsify_helly(const InequalitySystem& sys, std::span<const ObservedDistribution> observed) {
  const std::size_t h = helly_subset_size(sys.dims);
  const std::size_t q = observed.size();
  if (q <= h) return falsify(sys, observed);

  // Lexicographic walk over h-subsets of the arms.
  std::vector<std::size_t> idx(h);
  for (std::size_t i = 0; i < h; ++i) idx[i] = i;
  std::vector<ObservedDistribution> subset(h);
  while (true) {
    for (std::size_t i = 0; i < h; ++i) subset[i] = observed[idx[i]];
    if (falsify(sys, subset) == Feasibility::Infeasible) return Feasibility::Infeasible;
    std::size_t i = h;
    while (i > 0 && idx[i - 1] == q - h + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t k = i; k < h; ++k) idx[k] = idx[k - 1] + 1;
  }
  return Feasibility::Feasible;
}

SimulationResult simulate_falsification(const Dims& dims, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw Error(ErrorKind::InvalidArgument, "draws must be at least 1");
  const auto sys = nonredundant_system(dims);
  Rng rng(seed);
  SimulationResult res;
  res.dims = dims;
  res.draws = draws;
  std::vector<ObservedDistribution> observed(static_cast<std::size_t>(dims.Q));
  for (std::size_t t = 0; t < draws; ++t) {
    for (int z = 1; z <= dims.Q; ++z) {
      auto& o = observed[static_cast<std::size_t>(z - 1)];
      o.arm = z;
      o.probs = dirichlet_flat(rng, dims.cells());
    }
    if (falsify(sys, observed) == Feasibility::Infeasible) ++res.infeasible;
  }
  res.proportion = static_cast<double>(res.infeasible) / static_cast<double>(draws);
  return res;
}

}  // namespace ivbounds
