// Command-line front end. Exit status: 0 success, 2 model falsified, 1 error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ivbounds/bounds.hpp"
#include "ivbounds/chernoff.hpp"
#include "ivbounds/core.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/inequality_system.hpp"
#include "ivbounds/kl_inference.hpp"
#include "ivbounds/polytope_oracle.hpp"
#include "ivbounds/random.hpp"
#include "json.hpp"

namespace {

using namespace ivbounds;
using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFalsified = 2;

enum class Format { Json, Table, Csv };

struct DataOptions {
  std::string input;
  std::vector<std::string> drop_x;
  std::vector<std::string> drop_z;
};

struct Common {
  std::string format = "table";
  Format fmt() const { return format == "json" ? Format::Json : format == "csv" ? Format::Csv : Format::Table; }
};

std::string sig6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("input", d.input, "Count table (.csv or .json)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--drop-x", d.drop_x, "Discard a treatment level before analysis (breaks the IV assumptions)");
  cmd->add_option("--drop-z", d.drop_z, "Discard an instrument arm before analysis");
}

void add_format(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "table", "csv"}))
      ->capture_default_str();
}

Dataset load(const DataOptions& d) {
  Dataset ds = read_dataset(d.input);
  // Resolve every label against the original table, then drop from the highest
  // level down so earlier removals do not renumber later ones.
  std::vector<int> xs;
  std::vector<int> zs;
  for (const auto& t : d.drop_x) xs.push_back(ds.level('x', t));
  for (const auto& t : d.drop_z) zs.push_back(ds.level('z', t));
  std::sort(xs.rbegin(), xs.rend());
  std::sort(zs.rbegin(), zs.rend());
  if (!xs.empty()) {
    std::cerr << "warning: --drop-x conditions on the treatment received; the instrument is no longer "
                 "independent of the confounders, so these results are not valid IV bounds\n";
  }
  for (int x : xs) ds = drop_treatment(ds, x);
  for (int z : zs) ds = drop_arm(ds, z);
  return ds;
}

std::vector<LinearFunctional> parse_functionals(const std::vector<std::string>& specs, const Dataset& ds) {
  std::vector<LinearFunctional> out;
  for (const auto& s : specs) {
    out.push_back(parse_functional(s, ds));
    if (out.back().is_zero()) std::cerr << "warning: functional " << s << " has all-zero coefficients\n";
  }
  return out;
}

void print_intervals(Format fmt, const std::vector<std::string>& names, const std::vector<double>& lo,
                     const std::vector<double>& hi, const std::vector<std::string>& status) {
  if (fmt == Format::Csv) {
    std::cout << "functional,lower,upper,status\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::cout << '"' << names[i] << "\"," << sig6(lo[i]) << ',' << sig6(hi[i]) << ',' << status[i] << '\n';
    }
    return;
  }
  std::size_t width = std::string("functional").size();
  for (const auto& n : names) width = std::max(width, n.size());
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  std::cout << pad("functional", width) << "  " << pad("lower", 12) << "  " << pad("upper", 12) << "  status\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::cout << pad(names[i], width) << "  " << pad(sig6(lo[i]), 12) << "  " << pad(sig6(hi[i]), 12) << "  "
              << status[i] << '\n';
  }
}

int cmd_bounds(const DataOptions& d, const Common& c, const std::vector<std::string>& specs) {
  const Dataset ds = load(d);
  const auto fs = parse_functionals(specs, ds);
  const auto observed = empirical_distributions(ds);
  const auto sys = nonredundant_system(ds.dims());
  std::vector<BoundsResult> results;
  for (const auto& f : fs) results.push_back(plugin_bounds(sys, observed, f));
  const bool falsified = !results.empty() && results.front().status == Feasibility::Infeasible;

  if (c.fmt() == Format::Json) {
    Json arr = Json::array();
    for (const auto& r : results) {
      arr.push_back({{"functional", r.functional},
                     {"lower", number(r.lower)},
                     {"upper", number(r.upper)},
                     {"status", to_string(r.status)}});
    }
    std::cout << arr.dump(2) << '\n';
  } else {
    std::vector<std::string> names;
    std::vector<std::string> status;
    std::vector<double> lo;
    std::vector<double> hi;
    for (const auto& r : results) {
      names.push_back(r.functional);
      lo.push_back(r.lower);
      hi.push_back(r.upper);
      status.push_back(to_string(r.status));
    }
    print_intervals(c.fmt(), names, lo, hi, status);
  }
  return falsified ? kExitFalsified : kExitOk;
}

int cmd_ci(const DataOptions& d, const Common& c, const std::vector<std::string>& specs, double alpha,
           const CiOptions& opt) {
  const Dataset ds = load(d);
  const auto fs = parse_functionals(specs, ds);
  const auto sys = nonredundant_system(ds.dims());
  const auto report = confidence_intervals(sys, ds, fs, alpha, opt);

  if (c.fmt() == Format::Json) {
    Json arr = Json::array();
    for (const auto& ci : report.intervals) {
      arr.push_back({{"functional", ci.functional},
                     {"lower", number(ci.lower)},
                     {"upper", number(ci.upper)},
                     {"alpha", ci.alpha},
                     {"t_alpha", report.critical.t_alpha},
                     {"falsified", report.falsified}});
    }
    std::cout << arr.dump(2) << '\n';
  } else {
    if (c.fmt() == Format::Table) {
      std::cout << "alpha " << sig6(alpha) << "  t_alpha " << sig6(report.critical.t_alpha) << "  lambda* "
                << sig6(report.critical.lambda_star) << '\n';
    }
    std::vector<std::string> names;
    std::vector<std::string> status;
    std::vector<double> lo;
    std::vector<double> hi;
    for (const auto& ci : report.intervals) {
      names.push_back(ci.functional);
      lo.push_back(ci.lower);
      hi.push_back(ci.upper);
      status.push_back(report.falsified ? "falsified" : "ok");
    }
    print_intervals(c.fmt(), names, lo, hi, status);
  }
  return report.falsified ? kExitFalsified : kExitOk;
}

int cmd_falsify(const DataOptions& d, const Common& c, bool helly) {
  const Dataset ds = load(d);
  const auto observed = empirical_distributions(ds);
  const auto sys = nonredundant_system(ds.dims());
  const Feasibility f = helly ? falsify_helly(sys, observed) : falsify(sys, observed);
  if (c.fmt() == Format::Json) {
    std::cout << Json{{"status", to_string(f)}, {"method", helly ? "helly" : "direct"}}.dump(2) << '\n';
  } else if (c.fmt() == Format::Csv) {
    std::cout << "status\n" << to_string(f) << '\n';
  } else {
    std::cout << to_string(f) << '\n';
  }
  return f == Feasibility::Infeasible ? kExitFalsified : kExitOk;
}

struct DimsArgs {
  int Q = 1;
  int K = 2;
  int M = 2;
};

void add_dims(CLI::App* cmd, DimsArgs& a) {
  cmd->add_option("-Q,--Q", a.Q, "Instrument levels")->capture_default_str();
  cmd->add_option("-K,--K", a.K, "Treatment levels")->capture_default_str();
  cmd->add_option("-M,--M", a.M, "Outcome levels")->capture_default_str();
}

int cmd_audit(const DimsArgs& a, const Common& c, bool vertices) {
  const Dims dims = Dims::make(a.Q, a.K, a.M);
  Json checks = Json::array();
  auto record = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({{"check", name}, {"pass", pass}, {"detail", detail}});
  };

  const auto rt = index_roundtrip(dims);
  record("index_roundtrip", rt.ok, std::to_string(rt.strata_checked) + " strata, " +
                                       std::to_string(rt.cells_checked) + " cells");

  const auto full = enumerate_full(dims);
  const auto kept = filter_nonredundant(full);
  const auto counts = count_inequalities(dims);
  const auto q = static_cast<std::uint64_t>(dims.Q);
  record("counts", counts.total == q * full.rows.size() && counts.nonredundant == q * kept.rows.size(),
         std::to_string(kept.rows.size()) + " of " + std::to_string(full.rows.size()) + " rows per arm");

  const Prop1Searcher searcher(dims);
  std::size_t disagreements = 0;
  for (const auto& r : full.rows) {
    if (searcher.redundant(r.family) == (r.tag == RowTag::Nonredundant)) ++disagreements;
  }
  record("prop1_predicate", disagreements == 0, std::to_string(disagreements) + " disagreements");

  if (full.rows.size() * q <= kAuditRowCap) {
    const auto rep = lp_redundancy_audit(full);
    std::size_t nonred = 0;
    for (const auto& e : rep.entries) nonred += e.verdict == AuditVerdict::Nonredundant ? 1 : 0;
    record("lp_audit", rep.matches_tags(full),
           std::to_string(nonred) + " of " + std::to_string(rep.entries.size()) + " rows non-redundant");
  } else {
    record("lp_audit", true, "skipped: more than 5000 rows");
  }

  if (vertices) {
    const auto rep = verify_vertex_polytope(dims);
    record("vertex_polytope", rep.ok(),
           std::to_string(rep.vertices) + " vertices, dim " + std::to_string(rep.affine_dim) + ", " +
               std::to_string(rep.hull_facets) + " hull facets");
  }

  bool all = true;
  for (const auto& ch : checks) all = all && ch["pass"].get<bool>();
  if (c.fmt() == Format::Json) {
    std::cout << Json{{"dims", {{"Q", dims.Q}, {"K", dims.K}, {"M", dims.M}}}, {"pass", all}, {"checks", checks}}.dump(2)
              << '\n';
  } else if (c.fmt() == Format::Csv) {
    std::cout << "check,pass,detail\n";
    for (const auto& ch : checks) {
      std::cout << ch["check"].get<std::string>() << ',' << (ch["pass"].get<bool>() ? "pass" : "fail") << ",\""
                << ch["detail"].get<std::string>() << "\"\n";
    }
  } else {
    for (const auto& ch : checks) {
      std::cout << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["check"].get<std::string>() << ": "
                << ch["detail"].get<std::string>() << '\n';
    }
  }
  return all ? kExitOk : kExitError;
}

int cmd_simulate(const DimsArgs& a, const Common& c, std::size_t draws, std::uint64_t seed, int q_max,
                 const std::string& csv_path) {
  std::vector<SimulationResult> results;
  if (q_max > 0) {
    for (int q = 1; q <= q_max; ++q) results.push_back(simulate_falsification(Dims::make(q, a.K, a.M), draws, seed));
  } else {
    results.push_back(simulate_falsification(Dims::make(a.Q, a.K, a.M), draws, seed));
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + csv_path);
    out << "Q,proportion\n";
    for (const auto& r : results) out << r.dims.Q << ',' << sig6(r.proportion) << '\n';
  }
  if (c.fmt() == Format::Json) {
    Json arr = Json::array();
    for (const auto& r : results) {
      arr.push_back({{"Q", r.dims.Q},
                     {"K", r.dims.K},
                     {"M", r.dims.M},
                     {"draws", r.draws},
                     {"infeasible", r.infeasible},
                     {"proportion", r.proportion},
                     {"seed", seed},
                     {"rng", kRngVersion}});
    }
    std::cout << arr.dump(2) << '\n';
  } else if (c.fmt() == Format::Csv) {
    std::cout << "Q,K,M,draws,infeasible,proportion\n";
    for (const auto& r : results) {
      std::cout << r.dims.Q << ',' << r.dims.K << ',' << r.dims.M << ',' << r.draws << ',' << r.infeasible << ','
                << sig6(r.proportion) << '\n';
    }
  } else {
    for (const auto& r : results) {
      std::cout << "Q=" << r.dims.Q << " K=" << r.dims.K << " M=" << r.dims.M << "  proportion "
                << sig6(r.proportion) << "  (" << r.infeasible << " of " << r.draws << ")\n";
    }
  }
  return kExitOk;
}

int cmd_matrices(const DimsArgs& a, const Common& c, bool full_system, const std::string& output) {
  const Dims dims = Dims::make(a.Q, a.K, a.M);
  const auto sys = full_system ? enumerate_full(dims) : nonredundant_system(dims);
  std::ostringstream body;
  if (c.fmt() == Format::Csv) {
    write_dense_csv(sys, body);
  } else {
    body << system_to_json(sys) << '\n';
  }
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + output);
    out << body.str();
  }
  if (c.fmt() == Format::Table || !output.empty()) {
    std::cout << "rows per arm: " << sys.rows.size() << "\n";
  } else {
    std::cout << body.str();
  }
  if (c.fmt() != Format::Table || !output.empty()) std::cerr << "rows per arm: " << sys.rows.size() << '\n';
  return kExitOk;
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharp bounds, falsification tests and confidence intervals for categorical IV models"};
  app.require_subcommand(1);

  Common common;
  DataOptions data;
  DimsArgs dims;
  std::vector<std::string> functionals;
  double alpha = 0.05;
  CiOptions ci_opt;
  bool helly = false;
  bool vertices = false;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  int q_max = 0;
  std::string csv_path;
  bool full_system = false;
  std::string output;

  auto* bounds = app.add_subcommand("bounds", "Plug-in bounds on linear functionals");
  add_data_options(bounds, data);
  add_format(bounds, common);
  bounds->add_option("-f,--functional", functionals, "ate(i,j,y), marginal(i,y), stratum(y1,...,yK), raw([...])")
      ->required();

  auto* ci = app.add_subcommand("ci", "Simultaneous confidence intervals");
  add_data_options(ci, data);
  add_format(ci, common);
  ci->add_option("-f,--functional", functionals, "Functional to bound")->required();
  ci->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  ci->add_option("--max-cut-rounds", ci_opt.max_cut_rounds, "Cutting-plane round limit")->capture_default_str();
  ci->add_option("--tol-kl", ci_opt.tol_kl, "KL constraint tolerance")->capture_default_str();
  ci->add_option("--tol-obj", ci_opt.tol_obj, "Objective change tolerance")->capture_default_str();

  auto* fals = app.add_subcommand("falsify", "Test whether the data are compatible with the IV model");
  add_data_options(fals, data);
  add_format(fals, common);
  fals->add_flag("--helly", helly, "Check every subset of M^K arms instead of all arms at once");

  auto* audit = app.add_subcommand("audit", "Run the exact oracle checks for given dimensions");
  add_dims(audit, dims);
  add_format(audit, common);
  audit->add_flag("--vertices", vertices, "Also compare the vertex hull with the inequality system");

  auto* sim = app.add_subcommand("simulate", "Proportion of flat-Dirichlet draws that falsify the model");
  add_dims(sim, dims);
  add_format(sim, common);
  sim->add_option("--draws", draws, "Number of draws")->capture_default_str();
  sim->add_option("--seed", seed, "RNG seed")->capture_default_str();
  sim->add_option("--q-max", q_max, "Sweep Q = 1..q-max instead of a single Q");
  sim->add_option("--csv", csv_path, "Write (Q, proportion) pairs to this file");

  auto* mat = app.add_subcommand("matrices", "Export the per-arm inequality matrices");
  add_dims(mat, dims);
  add_format(mat, common);
  mat->add_flag("--full", full_system, "Include redundant rows");
  mat->add_option("-o,--output", output, "Write the matrices to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("ParseError", e.what());
    return kExitError;
  }

  try {
    if (bounds->parsed()) return cmd_bounds(data, common, functionals);
    if (ci->parsed()) return cmd_ci(data, common, functionals, alpha, ci_opt);
    if (fals->parsed()) return cmd_falsify(data, common, helly);
    if (audit->parsed()) return cmd_audit(dims, common, vertices);
    if (sim->parsed()) return cmd_simulate(dims, common, draws, seed, q_max, csv_path);
    if (mat->parsed()) return cmd_matrices(dims, common, full_system, output);
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return kExitError;
  }
  return kExitError;
}
