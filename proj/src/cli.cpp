#include "parfid/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "parfid/channels.hpp"
#include "parfid/document.hpp"
#include "parfid/generators.hpp"
#include "parfid/fidelity.hpp"
#include "parfid/partial_fidelity.hpp"
#include "parfid/sweeps.hpp"

namespace parfid {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr double kMinimizerCommutatorTol = 1e-9;

// Premise violations of the counterexample construction are reported with
// their own exit code.
class PremiseViolation : public Error {
 public:
  using Error::Error;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PARFID_SEED")) {
    try {
      std::size_t used = 0;
      const std::uint64_t s = std::stoull(env, &used);
      if (used == std::string(env).size()) return s;
    } catch (const std::exception&) {
    }
    throw SchemaError(std::string("PARFID_SEED is not an unsigned integer: '") + env + "'");
  }
  return kDefaultSeed;
}

MatrixDocument read_document(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return MatrixDocument::parse(ss.str());
  }
  return MatrixDocument::load(path);
}

HermitianMatrix single_density(const MatrixDocument& doc, const std::string& name) {
  const PositiveForm f = doc.form(name);
  if (f.algebra().num_blocks() != 1) {
    throw SchemaError("form '" + name + "' must live on a single matrix factor");
  }
  return f.density(0);
}

std::pair<std::string, std::string> split_pair(const std::string& s, const char* flag) {
  const auto comma = s.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == s.size()) {
    throw SchemaError(std::string(flag) + " expects NAME,NAME");
  }
  return {s.substr(0, comma), s.substr(comma + 1)};
}

BlockRanks parse_ranks(const std::string& s) {
  BlockRanks r;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      r.push_back(v);
    } catch (const std::exception&) {
      throw SchemaError("--ranks expects comma-separated integers, got '" + s + "'");
    }
  }
  return r;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json history_summary(const std::vector<double>& h) {
  json out = json::object();
  out["length"] = h.size();
  if (!h.empty()) {
    out["first"] = number(h.front());
    out["last"] = number(h.back());
  }
  return out;
}

struct FidelityArgs {
  std::string input;
  std::string omega;
  std::string rho;
  std::string route = "spectral";
  std::optional<std::uint64_t> seed;
};

int cmd_fidelity(const FidelityArgs& a, std::ostream& out) {
  const MatrixDocument doc = read_document(a.input);
  const PositiveForm w = doc.form(a.omega);
  const PositiveForm r = doc.form(a.rho);
  require_same_algebra(w.algebra(), r.algebra(), "fidelity");
  json rep;
  rep["omega"] = a.omega;
  rep["rho"] = a.rho;
  json routes = json::object();
  std::optional<double> value;
  if (a.route == "spectral" || a.route == "all") {
    const FidelityReport s = fidelity_spectral(w, r);
    routes["spectral"] = {{"value", number(s.value)}};
    value = s.value;
  }
  if (a.route == "variational" || a.route == "all") {
    OptimizerConfig cfg;
    cfg.seed = a.seed.value_or(default_seed());
    const FidelityReport v = fidelity_variational(w, r, cfg);
    routes["variational"] = {{"value", number(v.value)},
                             {"iterations", v.iterations},
                             {"converged", v.converged},
                             {"gradient_norm", number(v.residual)},
                             {"seed", cfg.seed},
                             {"bound_history", history_summary(v.bound_history)}};
    if (!value) value = v.value;
  }
  const double bound = std::sqrt(w.mass() * r.mass());
  rep["fidelity"] = number(*value);
  rep["routes"] = std::move(routes);
  rep["bound"] = {{"sqrt_mass_product", number(bound)}, {"holds", *value <= bound + 1e-11}};
  out << rep.dump(2) << "\n";
  return kExitOk;
}

struct ProfileArgs {
  std::string input;
  std::string omega;
  std::string rho;
  std::string trace;
  std::string ranks;
  bool csv = false;
};

int cmd_profile(const ProfileArgs& a, std::ostream& out) {
  const MatrixDocument doc = read_document(a.input);
  const PositiveForm w = doc.form(a.omega);
  const PositiveForm r = doc.form(a.rho);
  require_same_algebra(w.algebra(), r.algebra(), "profile");
  const BlockAlgebra& alg = w.algebra();
  const Trace tau = a.trace.empty() ? Trace::standard(alg) : doc.trace(a.trace);
  const bool single = alg.num_blocks() == 1;
  std::vector<BlockRanks> wanted;
  if (!a.ranks.empty()) {
    wanted.push_back(parse_ranks(a.ranks));
  } else if (!single) {
    throw SchemaError("profile over a block algebra needs --ranks r1,...,rK");
  }
  std::vector<PartialFidelitySpectral> rows;
  std::vector<BlockRanks> row_ranks;
  if (wanted.empty()) {
    for (int k = 0; k <= alg.dim(0); ++k) {
      row_ranks.push_back({k});
      rows.push_back(partial_fidelity_spectral(w, r, tau, BlockRanks{k}));
    }
  } else {
    for (const BlockRanks& k : wanted) {
      if (k.size() != alg.num_blocks()) throw SchemaError("--ranks needs one entry per block");
      row_ranks.push_back(k);
      rows.push_back(partial_fidelity_spectral(w, r, tau, k));
    }
  }
  json arr = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool rank_ok = rows[i].q0.ranks() == row_ranks[i];
    json row;
    if (single) {
      row["k"] = row_ranks[i][0];
    } else {
      row["k"] = row_ranks[i];
    }
    row["value"] = number(rows[i].value);
    row["minimizer_rank_check"] =
        rank_ok && rows[i].commutator_residual <= kMinimizerCommutatorTol;
    row["commutator_residual"] = number(rows[i].commutator_residual);
    arr.push_back(std::move(row));
  }
  if (a.csv) {
    out << "k,value\n";
    out.precision(17);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < row_ranks[i].size(); ++k) {
        out << (k ? ";" : "") << row_ranks[i][k];
      }
      out << "," << rows[i].value << "\n";
    }
  } else {
    out << arr.dump(2) << "\n";
  }
  return kExitOk;
}

struct FeasibilityArgs {
  std::string input;
  std::string pair_in;
  std::string pair_out;
  FeasibilityConfig cfg;
};

int cmd_feasibility(const FeasibilityArgs& a, std::ostream& out) {
  const MatrixDocument doc = read_document(a.input);
  const auto [wn, rn] = split_pair(a.pair_in, "--pair-in");
  const auto [wn2, rn2] = split_pair(a.pair_out, "--pair-out");
  const FeasibilityVerdict v =
      feasibility(single_density(doc, wn), single_density(doc, rn), single_density(doc, wn2),
                  single_density(doc, rn2), a.cfg);
  json rep;
  rep["status"] = status_name(v.status);
  rep["iterations"] = v.iterations;
  rep["psd_residual"] = number(v.psd_residual);
  rep["affine_residual"] = number(v.affine_residual);
  rep["gap"] = number(v.gap);
  rep["affine_inconsistent"] = v.affine_inconsistent;
  rep["note"] = v.note;
  json hist = json::array();
  for (const auto& [it, gap] : v.gap_history) hist.push_back({{"iteration", it}, {"gap", number(gap)}});
  rep["gap_history"] = std::move(hist);
  rep["config"] = {{"max_iters", a.cfg.max_iters}, {"feas_tol", a.cfg.feas_tol}};
  if (v.choi) rep["choi"] = matrix_to_json(v.choi->matrix().matrix());
  if (const auto cert = doc.scalar("certificate")) rep["certificate"] = number(*cert);
  out << rep.dump(2) << "\n";
  switch (v.status) {
    case FeasibilityStatus::feasible:
      return kExitOk;
    case FeasibilityStatus::infeasible:
      return kExitInfeasible;
    case FeasibilityStatus::unknown:
      return kExitUnknown;
  }
  return kExitUnknown;
}

struct CounterexampleArgs {
  std::string input;
  std::string omega;
  std::string omega_prime;
  std::string output;
};

int cmd_counterexample(const CounterexampleArgs& a, std::ostream& out) {
  const MatrixDocument in = read_document(a.input);
  const HermitianMatrix w = single_density(in, a.omega);
  const HermitianMatrix w2 = single_density(in, a.omega_prime);
  KanalCounterexample ce;
  try {
    ce = kanal_counterexample(w, w2);
  } catch (const PreconditionError& e) {
    throw PremiseViolation(e.what());
  }
  MatrixDocument doc(BlockAlgebra({static_cast<int>(w.dim())}));
  doc.set_form("omega", PositiveForm::single(w));
  doc.set_form("rho", PositiveForm::single(pure_density(ce.psi)));
  doc.set_form("omega_prime", PositiveForm::single(w2));
  doc.set_form("rho_prime", PositiveForm::single(pure_density(ce.phi)));
  doc.set_vector("psi", ce.psi);
  doc.set_vector("phi", ce.phi);
  doc.set_scalar("certificate", ce.certificate);
  doc.set_scalar("fidelity_in", ce.fidelity_in);
  doc.set_scalar("fidelity_out", ce.fidelity_out);
  doc.set_scalar("lambda", ce.lambda);
  doc.set_scalar("beta", ce.beta);
  doc.set_scalar("input_min_eigenvalue", ce.input_min_eigenvalue);
  doc.set_scalar("j", ce.j);
  doc.set_scalar("k", ce.k);
  if (a.output.empty()) {
    out << doc.dump() << "\n";
  } else {
    doc.save(a.output);
    json rep = doc.to_json()["scalars"];
    rep["document"] = a.output;
    out << rep.dump(2) << "\n";
  }
  return kExitOk;
}

struct CheckArgs {
  std::string suite;
  std::optional<std::uint64_t> seed;
  int cases = 200;
  int jobs = 1;
  bool inject = false;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  SuiteOptions o;
  o.seed = a.seed.value_or(default_seed());
  o.cases = a.cases;
  o.jobs = a.jobs;
  o.inject_violation = a.inject;
  SuiteResult r;
  try {
    r = run_suite(a.suite, o);
  } catch (const PreconditionError& e) {
    throw SchemaError(e.what());
  }
  json rep;
  rep["suite"] = r.suite;
  rep["property"] = r.property;
  rep["tolerance"] = r.tolerance;
  rep["seed"] = o.seed;
  rep["cases"] = r.cases;
  rep["passed"] = r.passed;
  rep["failed"] = r.failed;
  rep["worst_defect"] = number(r.worst_defect);
  rep["inject_violation"] = a.inject;
  if (r.first_failing_case) {
    rep["first_failing_case"] = *r.first_failing_case;
    rep["first_failing_seed"] = *r.first_failing_seed;
    rep["first_failure"] = r.first_failure;
  }
  out << rep.dump(2) << "\n";
  return r.failed == 0 ? kExitOk : kExitValidation;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fidelity, partial fidelity and state transformability at desk scale", "parfid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kSchemaVersion));

  FidelityArgs fa;
  CLI::App* fid = app.add_subcommand("fidelity", "F(omega, rho) with route diagnostics");
  fid->add_option("input", fa.input, "input document ('-' for stdin)")->required();
  fid->add_option("--omega", fa.omega, "name of the first form")->required();
  fid->add_option("--rho", fa.rho, "name of the second form")->required();
  fid->add_option("--route", fa.route, "spectral, variational or all")
      ->check(CLI::IsMember({"spectral", "variational", "all"}));
  fid->add_option("--seed", fa.seed, "seed for the variational route");

  ProfileArgs pa;
  CLI::App* prof = app.add_subcommand("profile", "partial fidelities over the rank classes");
  prof->add_option("input", pa.input, "input document ('-' for stdin)")->required();
  prof->add_option("--omega", pa.omega, "name of the first form")->required();
  prof->add_option("--rho", pa.rho, "name of the second form")->required();
  prof->add_option("--trace", pa.trace, "name of the trace weights (default: all 1)");
  prof->add_option("--ranks", pa.ranks, "rank vector r1,...,rK (required for block algebras)");
  prof->add_flag("--csv", pa.csv, "emit k,value CSV instead of JSON");

  FeasibilityArgs ea;
  CLI::App* feas = app.add_subcommand("feasibility", "is there a channel mapping one pair to another");
  feas->add_option("input", ea.input, "input document ('-' for stdin)")->required();
  feas->add_option("--pair-in", ea.pair_in, "input states OMEGA,RHO")->required();
  feas->add_option("--pair-out", ea.pair_out, "output states OMEGA,RHO")->required();
  feas->add_option("--max-iters", ea.cfg.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  feas->add_option("--tol", ea.cfg.feas_tol, "feasibility tolerance")->check(CLI::PositiveNumber);

  CounterexampleArgs ca;
  CLI::App* cex = app.add_subcommand("counterexample", "pure states with equal fidelities that no channel relates");
  cex->add_option("input", ca.input, "input document ('-' for stdin)")->required();
  cex->add_option("--omega", ca.omega, "name of the input mixed state")->required();
  cex->add_option("--omega-prime", ca.omega_prime, "name of the output mixed state")->required();
  cex->add_option("--output", ca.output, "write the document here and print a summary");

  CheckArgs ka;
  CLI::App* chk = app.add_subcommand("check", "run a named property sweep");
  std::string suite_list;
  for (const SuiteInfo& s : suites()) suite_list += (suite_list.empty() ? "" : ", ") + s.name;
  chk->add_option("--suite", ka.suite, "one of: " + suite_list)->required();
  chk->add_option("--seed", ka.seed, "suite seed (default: PARFID_SEED or 1)");
  chk->add_option("--cases", ka.cases, "number of cases")->check(CLI::NonNegativeNumber);
  chk->add_option("--jobs", ka.jobs, "worker threads")->check(CLI::PositiveNumber);
  chk->add_flag("--inject-violation", ka.inject, "corrupt every case; the sweep must fail");

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (fid->parsed()) return cmd_fidelity(fa, out);
    if (prof->parsed()) return cmd_profile(pa, out);
    if (feas->parsed()) return cmd_feasibility(ea, out);
    if (cex->parsed()) return cmd_counterexample(ca, out);
    if (chk->parsed()) return cmd_check(ka, out);
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const PremiseViolation& e) {
    err << "premise violation: " << e.what() << "\n";
    return kExitPremise;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NotPsdError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PreconditionError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitSchema;
}

}  // namespace parfid
