#include "dpme/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dpme/error.hpp"
#include "dpme/inference.hpp"
#include "dpme/rkhs_embedding.hpp"
#include "dpme/rng.hpp"
#include "dpme/simplex_qp.hpp"
#include "dpme/stick_breaking.hpp"

namespace dpme::validation {
namespace {

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

GaussianComponent random_component(std::size_t d, Rng& rng) {
  GaussianComponent c{Eigen::VectorXd(static_cast<Eigen::Index>(d)), Eigen::VectorXd(static_cast<Eigen::Index>(d))};
  for (std::size_t j = 0; j < d; ++j) {
    c.mean[static_cast<Eigen::Index>(j)] = rng.normal();
    c.cov_diag[static_cast<Eigen::Index>(j)] = 0.2 + 1.8 * rng.uniform();
  }
  return c;
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

Dataset two_cluster_data(int m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd points(m, 1);
  for (int k = 0; k < m; ++k) {
    const double center = rng.uniform() < 0.7 ? -3.0 : 3.0;
    points(k, 0) = center + rng.normal();
  }
  return Dataset(std::move(points));
}

SuiteReport tail_mass_suite(std::uint64_t seed, int n_draws) {
  SuiteReport report{"tail", {}};
  const Rng root(seed);
  std::uint64_t stream = 0;
  for (const double alpha : {0.5, 1.0, 2.0, 5.0}) {
    for (const int t : {1, 5, 10, 25}) {
      Rng rng = root.split(stream++);
      double sum = 0.0;
      double sum_sq = 0.0;
      for (int n = 0; n < n_draws; ++n) {
        const auto betas = sample_betas(alpha, t, rng);
        const double tail = weights_from_betas(betas).tail_mass;
        sum += tail;
        sum_sq += tail * tail;
      }
      const double nn = n_draws;
      const double mean = sum / nn;
      const double se = std::sqrt(std::max(0.0, sum_sq / nn - mean * mean) / (nn - 1.0));
      const double exact = expected_tail_mass(alpha, t);
      const double z = se > 0.0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : INFINITY);
      report.checks.push_back(at_most(format("tail_mass alpha=%g T=%g", alpha, t), z, 4.0,
                                      format("mc=%.6e exact=%.6e se=%.2e", mean, exact, se)));
    }
  }
  return report;
}

SuiteReport bound_suite(std::uint64_t seed) {
  SuiteReport report{"bound", {}};
  const BaseMeasure base = BaseMeasure::isotropic(1, 0.0, 1.0, 1.0);
  const KernelConfig cfg{1.0};
  std::vector<int> truncations(15);
  std::iota(truncations.begin(), truncations.end(), 1);

  std::uint64_t stream = 0;
  for (const double alpha : {0.5, 1.0, 2.0}) {
    int t_ref = 4 * truncations.back();
    while (expected_tail_mass(alpha, t_ref) >= 1e-10) ++t_ref;
    const DecayReport decay =
        truncation_decay_check(alpha, base, cfg, truncations, t_ref, 2000, mix_seed(seed, stream++));

    double worst_ratio = 0.0;
    int worst_t = 0;
    for (std::size_t k = 0; k < decay.truncations.size(); ++k) {
      const double ratio = decay.mean_gap[k] / decay.bound[k];
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_t = decay.truncations[k];
      }
    }
    report.checks.push_back(at_most(format("gap_under_bound alpha=%g", alpha), worst_ratio, 1.0,
                                    format("max mean_gap/exp(-T/alpha) at T=%g; mean_gap(T=15)=%.3e",
                                           worst_t, decay.mean_gap.back())));

    const double lo = -1.4 / alpha;
    const double hi = -0.6 / alpha;
    report.checks.push_back({format("decay_slope alpha=%g", alpha), decay.slope >= lo && decay.slope <= hi,
                             decay.slope, lo,
                             format("window [%.4f, %.4f]; exact-mean rate ln(alpha/(alpha+2))=%.4f", lo, hi,
                                    std::log(alpha / (alpha + 2.0)))});
    report.checks.push_back({format("monotone_per_draw alpha=%g", alpha), decay.monotone_per_draw,
                             decay.monotone_per_draw ? 1.0 : 0.0, 1.0, ""});
  }
  return report;
}

SuiteReport gram_suite(std::uint64_t seed) {
  SuiteReport report{"gram", {}};
  constexpr int kSamples = 1000000;
  const Rng root(seed);

  {
    const GaussianComponent f{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
    const double value = component_inner(f, f, KernelConfig{1.0});
    report.checks.push_back(at_most("reference d=1 sqrt(1/3)", std::abs(value - std::sqrt(1.0 / 3.0)), 1e-12,
                                    format("closed form %.17g", value)));
  }

  std::uint64_t stream = 0;
  for (const std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
    for (int instance = 0; instance < 8; ++instance) {
      Rng rng = root.split(stream++);
      const KernelConfig cfg{0.5 + 1.5 * rng.uniform()};
      const GaussianComponent f = random_component(d, rng);
      const GaussianComponent g = random_component(d, rng);
      Eigen::MatrixXd pts(16, static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < pts.size(); ++k) pts.data()[k] = 1.5 * rng.normal();
      const Dataset data(std::move(pts));

      const double closed = component_inner(f, g, cfg);
      const McEstimate mc = mc_component_inner(f, g, cfg, kSamples, rng.next_u64());
      const double z = std::abs(closed - mc.estimate) / mc.std_error;
      report.checks.push_back(at_most(format("component_inner d=%g #%g", static_cast<double>(d), instance), z, 3.0,
                                      format("closed=%.8f mc=%.8f se=%.1e", closed, mc.estimate, mc.std_error)));

      const double closed_data = component_data_inner(f, data, cfg);
      const McEstimate mc_data = mc_component_data_inner(f, data, cfg, kSamples, rng.next_u64());
      const double z_data = std::abs(closed_data - mc_data.estimate) / mc_data.std_error;
      report.checks.push_back(
          at_most(format("component_data_inner d=%g #%g", static_cast<double>(d), instance), z_data, 3.0,
                  format("closed=%.8f mc=%.8f se=%.1e", closed_data, mc_data.estimate, mc_data.std_error)));
    }
  }
  return report;
}

SuiteReport dirichlet_suite(std::uint64_t seed) {
  SuiteReport report{"dirichlet", {}};
  const BaseMeasure base = BaseMeasure::isotropic(1, 0.0, 1.0, 1.0);
  const double inf = INFINITY;
  const std::vector<Interval> cells{{-inf, -0.5}, {-0.5, 0.5}, {0.5, inf}};
  std::uint64_t stream = 0;
  for (const double alpha : {1.0, 10.0}) {
    int t_proxy = 1;
    while (expected_tail_mass(alpha, t_proxy) >= 1e-8) ++t_proxy;
    const DirichletCheckReport moments =
        dirichlet_marginal_check(alpha, base, cells, 10000, t_proxy, mix_seed(seed, stream++));
    for (std::size_t c = 0; c < moments.cells.size(); ++c) {
      const CellMoments& cell = moments.cells[c];
      const double idx = static_cast<double>(c + 1);
      report.checks.push_back(at_most(format("cell_mean alpha=%g A%g", alpha, idx), cell.mean_z(), 3.0,
                                      format("mean=%.5f G0=%.5f se=%.1e", cell.mean, cell.base_mass, cell.mean_se)));
      report.checks.push_back(at_most(format("cell_var alpha=%g A%g", alpha, idx), cell.var_z(), 3.0,
                                      format("var=%.5f expected=%.5f se=%.1e", cell.var, cell.expected_var,
                                             cell.var_se)));
    }
  }
  return report;
}

SuiteReport qp_suite(std::uint64_t seed) {
  SuiteReport report{"qp", {}};
  Rng rng(seed);
  double worst_gap = -INFINITY;
  double worst_kkt = 0.0;
  int converged = 0;
  constexpr int kInstances = 50;
  for (int n = 0; n < kInstances; ++n) {
    Eigen::MatrixXd a(3, 3);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = rng.normal();
    QPProblem problem;
    problem.Q = a * a.transpose();
    problem.Q = 0.5 * (problem.Q + problem.Q.transpose()).eval();
    problem.r = Eigen::VectorXd(3);
    for (Eigen::Index i = 0; i < 3; ++i) problem.r[i] = rng.normal();

    const QPSolution sol = solve(problem, {1e-8, 50000, 0});
    const QPSolution grid = brute_force_solve(problem, 1e-3);
    worst_gap = std::max(worst_gap, sol.objective - grid.objective);
    if (sol.converged) {
      ++converged;
      worst_kkt = std::max(worst_kkt, sol.kkt_residual);
    }
  }
  report.checks.push_back(at_most("objective_vs_brute_force", worst_gap, 1e-4,
                                  format("max(solve - grid) over %g instances", kInstances)));
  report.checks.push_back(at_most("kkt_residual_converged", worst_kkt, 1e-8,
                                  format("%g of %g converged", converged, kInstances)));

  QPProblem analytic;
  analytic.Q = Eigen::MatrixXd::Identity(2, 2);
  analytic.r = Eigen::Vector2d(1.0, 0.0);
  const QPSolution a = solve(analytic);
  const double err = (a.pi - Eigen::Vector2d(1.0, 0.0)).cwiseAbs().maxCoeff();
  report.checks.push_back(at_most("analytic Q=I r=[1,0]", err, 1e-9,
                                  format("pi=[%.17g, %.17g] objective=%.17g", a.pi[0], a.pi[1], a.objective)));

  analytic.r = Eigen::Vector2d::Zero();
  const QPSolution b = solve(analytic);
  const double err_b = std::max((b.pi - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff(), std::abs(b.objective - 0.25));
  report.checks.push_back(at_most("analytic Q=I r=0", err_b, 1e-12, format("objective=%.17g", b.objective)));
  return report;
}

SuiteReport recovery_suite(std::uint64_t seed) {
  SuiteReport report{"recovery", {}};
  const std::vector<GaussianComponent> truth{
      {Eigen::VectorXd::Constant(1, -3.0), Eigen::VectorXd::Ones(1)},
      {Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Ones(1)}};
  FitConfig cfg;
  cfg.bandwidth2 = 1.0;
  cfg.epsilon = 1e-8;

  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset data = two_cluster_data(5000, mix_seed(seed, s));
    cfg.seed = s;
    const FitResult result = fit_with_atoms(data, truth, cfg);
    const double err = std::max(std::abs(result.model.weights[0] - 0.7), std::abs(result.model.weights[1] - 0.3));
    worst = std::max(worst, err);
  }
  report.checks.push_back(at_most("weights_at_truth max_inf_error", worst, 0.05, "10 seeds, m=5000"));

  FitConfig km;
  km.trunc = 20;
  km.atom_strategy = AtomStrategy::kmeans;
  km.seed = seed;
  const FitResult result = fit(two_cluster_data(5000, mix_seed(seed, 0)), km);
  const int effective = effective_components(result.model, 0.02);
  report.checks.push_back({"effective_components kmeans T=20 floor=0.02", effective >= 1 && effective <= 3,
                           static_cast<double>(effective), 2.0, "expected 2 +/- 1"});
  return report;
}

const std::vector<std::string>& cli_suite_names() {
  static const std::vector<std::string> names{"bound", "gram", "dirichlet", "qp"};
  return names;
}

SuiteReport run_suite(std::string_view name, std::uint64_t seed) {
  if (name == "bound") return bound_suite(seed);
  if (name == "gram") return gram_suite(seed);
  if (name == "dirichlet") return dirichlet_suite(seed);
  if (name == "qp") return qp_suite(seed);
  throw DomainError("unknown validation suite '" + std::string(name) + "'");
}

}  // namespace dpme::validation
