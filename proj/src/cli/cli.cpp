#include "dpme/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include "dpme/error.hpp"
#include "dpme/inference.hpp"
#include "dpme/rng.hpp"
#include "dpme/stick_breaking.hpp"
#include "dpme/validation.hpp"

namespace dpme::cli {
namespace {

using Json = nlohmann::ordered_json;

Json manifest(const std::string& command, Json config, std::uint64_t seed, const std::string& digest) {
  Json m;
  m["command"] = command;
  m["config"] = std::move(config);
  m["seed"] = seed;
  m["artifact_version"] = DPME_VERSION;
  m["input_digest"] = digest;
  return m;
}

Json to_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json atoms_json(const std::vector<GaussianComponent>& atoms) {
  Json means = Json::array();
  Json covs = Json::array();
  for (const auto& a : atoms) {
    means.push_back(to_json(a.mean));
    covs.push_back(to_json(a.cov_diag));
  }
  return Json{{"means", std::move(means)}, {"cov_diag", std::move(covs)}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string data;
  bool header = false;
  double alpha = 1.0;
  std::optional<int> trunc;
  std::optional<double> delta;
  std::string atoms = "kmeans";
  std::optional<double> bandwidth2;
  bool median = false;
  std::optional<double> epsilon;
  double comp_cov_scale = FitConfig{}.comp_cov_scale;
  double weight_floor = FitConfig{}.weight_floor;
  double tol = SolverOptions{}.tol;
  int max_iter = SolverOptions{}.max_iter;
  std::uint64_t seed = 0;
  std::string out;
  bool assign = false;
};

int cmd_fit(const FitArgs& a) {
  const std::string bytes = read_file(a.data);
  const Dataset data = parse_csv(bytes, a.header);

  FitConfig cfg;
  cfg.alpha = a.alpha;
  cfg.trunc = a.trunc;
  if (a.delta) cfg.delta = *a.delta;
  cfg.atom_strategy = parse_atom_strategy(a.atoms);
  cfg.epsilon = a.epsilon;
  cfg.bandwidth2 = a.bandwidth2;
  cfg.comp_cov_scale = a.comp_cov_scale;
  cfg.weight_floor = a.weight_floor;
  cfg.seed = a.seed;
  cfg.solver = {a.tol, a.max_iter, a.seed};
  cfg.validate();

  const FitResult r = fit(data, cfg);

  Json config;
  config["data"] = a.data;
  config["header"] = a.header;
  config["alpha"] = cfg.alpha;
  config["trunc"] = r.model.truncation();
  config["trunc_mode"] = cfg.trunc ? "fixed" : "auto";
  config["delta"] = cfg.trunc ? Json(nullptr) : Json(cfg.delta);
  config["atoms"] = std::string(to_string(cfg.atom_strategy));
  config["bandwidth2"] = r.kernel.bandwidth2;
  config["bandwidth_mode"] = cfg.bandwidth2 ? "fixed" : "median";
  config["epsilon"] = r.epsilon;
  config["comp_cov_scale"] = cfg.comp_cov_scale;
  config["weight_floor"] = cfg.weight_floor;
  config["tol"] = cfg.solver.tol;
  config["max_iter"] = cfg.solver.max_iter;
  config["assign"] = a.assign;

  Json j;
  j["manifest"] = manifest("fit", std::move(config), a.seed, sha256_hex(bytes));
  j["weights"] = to_json(r.model.weights);
  j["atoms"] = atoms_json(r.model.components);
  j["mmd2"] = r.mmd2;
  j["objective"] = r.qp.objective;
  j["kkt_residual"] = r.qp.kkt_residual;
  j["converged"] = r.qp.converged;
  j["effective_T"] = r.effective_T;
  j["truncation_bound"] = r.truncation_bound;
  if (a.assign) {
    j["assignments"] = r.latents.assignments;
    j["flagged_rows"] = r.latents.flagged_rows;
  }
  write_json(a.out, j);
  return kOk;
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  double alpha = 1.0;
  int trunc = 1;
  int n = 0;
  int dim = 1;
  double mean0 = 0.0;
  double tau2 = 25.0;
  double comp_var = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  if (a.n < 0) throw DomainError("--n must be non-negative");
  if (a.dim < 1) throw DomainError("--dim must be at least 1");
  const BaseMeasure base = BaseMeasure::isotropic(static_cast<std::size_t>(a.dim), a.mean0, a.tau2, a.comp_var);
  const PriorDraw draw = sample_draw(a.alpha, a.trunc, base, mix_seed(a.seed, 0));

  const auto& w = draw.sticks.weights;
  std::vector<double> cumulative(w.size());
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  if (!(cumulative.back() > 0.0)) throw DomainError("drawn weights are all zero; increase --trunc");

  Rng rng(mix_seed(a.seed, 1));
  std::string csv;
  for (int k = 0; k < a.n; ++k) {
    const double u = rng.uniform() * cumulative.back();
    const auto idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()),
        w.size() - 1);
    const Eigen::VectorXd x = sample_component(draw.components[idx], rng);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (j > 0) csv += ',';
      csv += format_double(x[j]);
    }
    csv += '\n';
  }
  write_text(a.out, csv);

  Json config;
  config["alpha"] = a.alpha;
  config["trunc"] = a.trunc;
  config["n"] = a.n;
  config["dim"] = a.dim;
  config["mean0"] = a.mean0;
  config["tau2"] = a.tau2;
  config["comp_var"] = a.comp_var;
  config["out"] = a.out;

  Json side;
  side["manifest"] = manifest("sample", std::move(config), a.seed, "");
  side["betas"] = draw.sticks.betas;
  side["weights"] = draw.sticks.weights;
  side["tail_mass"] = draw.sticks.tail_mass;
  side["atoms"] = atoms_json(draw.components);
  write_json(a.out + ".json", side);
  return kOk;
}

// ---- check-truncation -----------------------------------------------------

struct TruncArgs {
  double alpha = 1.0;
  double delta = 0.0;
  double c = 1.0;
  bool json = false;
};

int cmd_check_truncation(const TruncArgs& a, std::ostream& out) {
  const int t = choose_truncation(a.alpha, a.delta, a.c);
  const double bound = truncation_bound(a.alpha, t, a.c);
  const double exact = expected_tail_mass(a.alpha, t);
  if (a.json) {
    Json j;
    j["trunc"] = t;
    j["bound"] = bound;
    j["exact_tail"] = exact;
    out << j.dump(2) << "\n";
  } else {
    out << "trunc       " << t << "\n"
        << "bound       " << format_double(bound) << "   C*exp(-T/alpha)\n"
        << "exact_tail  " << format_double(exact) << "   (alpha/(1+alpha))^T\n";
  }
  return kOk;
}

// ---- validate -------------------------------------------------------------

struct ValidateArgs {
  std::string suite;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  std::vector<std::string> names;
  if (a.suite == "all") {
    names = validation::cli_suite_names();
  } else {
    names.push_back(a.suite);
  }

  Json suites = Json::array();
  bool all_passed = true;
  for (const auto& name : names) {
    const validation::SuiteReport report = validation::run_suite(name, a.seed);
    Json checks = Json::array();
    for (const auto& c : report.checks) {
      out << (c.passed ? "PASS " : "FAIL ") << report.name << " | " << c.name << " | measured "
          << format_double(c.measured) << " | threshold " << format_double(c.threshold);
      if (!c.detail.empty()) out << " | " << c.detail;
      out << "\n";
      checks.push_back(Json{{"name", c.name},
                            {"passed", c.passed},
                            {"measured", c.measured},
                            {"threshold", c.threshold},
                            {"detail", c.detail}});
    }
    all_passed = all_passed && report.passed();
    suites.push_back(Json{{"name", report.name}, {"passed", report.passed()}, {"checks", std::move(checks)}});
  }
  out << (all_passed ? "validate: all checks passed\n" : "validate: some checks FAILED\n");

  if (!a.out.empty()) {
    Json j;
    j["manifest"] = manifest("validate", Json{{"suite", a.suite}}, a.seed, "");
    j["suites"] = std::move(suites);
    j["passed"] = all_passed;
    write_json(a.out, j);
  }
  return all_passed ? kOk : kInternalError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel-embedding fits of truncated Dirichlet Process mixtures", "dpme_cli"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit mixture weights by RKHS distance minimization");
  fit_cmd->add_option("--data", fit_args.data, "CSV file of observations")->required();
  fit_cmd->add_flag("--header", fit_args.header, "Skip the first CSV row");
  fit_cmd->add_option("--alpha", fit_args.alpha, "DP concentration")->required();
  auto* trunc_opt = fit_cmd->add_option("--trunc", fit_args.trunc, "Truncation level T");
  auto* delta_opt = fit_cmd->add_option("--delta", fit_args.delta, "Choose T so that exp(-T/alpha) <= delta");
  trunc_opt->excludes(delta_opt);
  fit_cmd->add_option("--atoms", fit_args.atoms, "Atom strategy")
      ->check(CLI::IsMember({"sample", "kmeans", "subsample"}));
  auto* bw_opt = fit_cmd->add_option("--bandwidth2", fit_args.bandwidth2, "Squared kernel bandwidth");
  auto* median_opt = fit_cmd->add_flag("--median", fit_args.median, "Median-heuristic bandwidth (default)");
  bw_opt->excludes(median_opt);
  fit_cmd->add_option("--epsilon", fit_args.epsilon, "Ridge regularization (default 1e-6 trace(S)/T)");
  fit_cmd->add_option("--comp-cov-scale", fit_args.comp_cov_scale, "Atom variance as a fraction of data variance");
  fit_cmd->add_option("--weight-floor", fit_args.weight_floor, "Floor for counting effective components");
  fit_cmd->add_option("--tol", fit_args.tol, "KKT residual tolerance");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "Solver iteration cap");
  fit_cmd->add_option("--seed", fit_args.seed, "Random seed");
  fit_cmd->add_option("--out", fit_args.out, "Output JSON path")->required();
  fit_cmd->add_flag("--assign", fit_args.assign, "Include latent assignments");

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Prior predictive draws from a truncated stick-breaking DP mixture");
  sample_cmd->add_option("--alpha", sample_args.alpha, "DP concentration")->required();
  sample_cmd->add_option("--trunc", sample_args.trunc, "Truncation level T")->required();
  sample_cmd->add_option("--n", sample_args.n, "Number of points")->required();
  sample_cmd->add_option("--dim", sample_args.dim, "Dimension");
  sample_cmd->add_option("--mean0", sample_args.mean0, "Base measure mean (all coordinates)");
  sample_cmd->add_option("--tau2", sample_args.tau2, "Base measure variance of component means");
  sample_cmd->add_option("--comp-var", sample_args.comp_var, "Component variance (all coordinates)");
  sample_cmd->add_option("--seed", sample_args.seed, "Random seed");
  sample_cmd->add_option("--out", sample_args.out, "Output CSV path; sidecar written to <out>.json")->required();

  TruncArgs trunc_args;
  auto* trunc_cmd = app.add_subcommand("check-truncation", "Truncation level for a target embedding error");
  trunc_cmd->add_option("--alpha", trunc_args.alpha, "DP concentration")->required();
  trunc_cmd->add_option("--delta", trunc_args.delta, "Target squared-RKHS error")->required();
  trunc_cmd->add_option("--c", trunc_args.c, "Bound constant C (default sup k(x,x) = 1)");
  trunc_cmd->add_flag("--json", trunc_args.json, "Machine-readable output");

  ValidateArgs validate_args;
  auto* validate_cmd = app.add_subcommand("validate", "Run validation suites");
  validate_cmd->add_option("--suite", validate_args.suite, "Suite to run")
      ->required()
      ->check(CLI::IsMember({"bound", "gram", "dirichlet", "qp", "all"}));
  validate_cmd->add_option("--seed", validate_args.seed, "Random seed");
  validate_cmd->add_option("--out", validate_args.out, "Write a JSON report here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args);
    if (sample_cmd->parsed()) return cmd_sample(sample_args);
    if (trunc_cmd->parsed()) return cmd_check_truncation(trunc_args, out);
    if (validate_cmd->parsed()) return cmd_validate(validate_args, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  } catch (const DomainError& e) {
    err << "argument error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DimensionError& e) {
    err << "argument error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace dpme::cli
