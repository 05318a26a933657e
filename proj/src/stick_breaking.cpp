#include "dpme/stick_breaking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dpme/error.hpp"

namespace dpme {
namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("alpha must be positive and finite, got " + std::to_string(alpha));
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double base_mass(const BaseMeasure& base, const Interval& cell) {
  const double sd = std::sqrt(base.tau2);
  const double lo = std::isinf(cell.lo) ? 0.0 : normal_cdf((cell.lo - base.mean0[0]) / sd);
  const double hi = std::isinf(cell.hi) ? 1.0 : normal_cdf((cell.hi - base.mean0[0]) / sd);
  return hi - lo;
}

void validate_partition(std::span<const Interval> partition) {
  if (partition.empty()) throw PartitionError("partition has no cells");
  std::vector<Interval> sorted(partition.begin(), partition.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& cell : sorted) {
    if (!(cell.lo < cell.hi)) throw PartitionError("partition cell has lo >= hi");
  }
  if (!std::isinf(sorted.front().lo) || sorted.front().lo > 0.0) {
    throw PartitionError("partition does not start at -inf");
  }
  if (!std::isinf(sorted.back().hi) || sorted.back().hi < 0.0) {
    throw PartitionError("partition does not end at +inf");
  }
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].hi < sorted[i + 1].lo) throw PartitionError("partition leaves a gap");
    if (sorted[i].hi > sorted[i + 1].lo) throw PartitionError("partition cells overlap");
  }
}

double standardized(double diff, double se) {
  if (std::abs(diff) <= 1e-12) return 0.0;
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(diff) / se;
}

}  // namespace

void BaseMeasure::validate() const {
  if (mean0.size() == 0) throw DimensionError("base measure has zero dimension");
  if (comp_cov.size() != mean0.size()) {
    throw DimensionError("base measure comp_cov length differs from mean0");
  }
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw DomainError("tau2 must be positive");
  if (!mean0.allFinite()) throw DomainError("mean0 must be finite");
  for (Eigen::Index j = 0; j < comp_cov.size(); ++j) {
    if (!(comp_cov[j] > 0.0) || !std::isfinite(comp_cov[j])) {
      throw DomainError("comp_cov entries must be positive");
    }
  }
}

BaseMeasure BaseMeasure::isotropic(std::size_t dim, double mean0, double tau2, double comp_var) {
  const auto d = static_cast<Eigen::Index>(dim);
  BaseMeasure base{Eigen::VectorXd::Constant(d, mean0), tau2, Eigen::VectorXd::Constant(d, comp_var)};
  base.validate();
  return base;
}

std::vector<double> sample_betas(double alpha, int truncation, Rng& rng) {
  require_alpha(alpha);
  if (truncation < 1) throw DomainError("truncation level must be at least 1");
  const double inv_alpha = 1.0 / alpha;
  std::vector<double> betas(static_cast<std::size_t>(truncation));
  for (double& beta : betas) beta = 1.0 - std::pow(rng.uniform_open(), inv_alpha);
  return betas;
}

std::vector<double> sample_betas(double alpha, int truncation, std::uint64_t seed) {
  Rng rng(seed);
  return sample_betas(alpha, truncation, rng);
}

StickWeights weights_from_betas(std::span<const double> betas) {
  StickWeights out;
  out.weights.reserve(betas.size());
  double remaining = 1.0;
  for (const double beta : betas) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw DomainError("stick-breaking fraction outside [0, 1]: " + std::to_string(beta));
    }
    out.weights.push_back(beta * remaining);
    remaining *= 1.0 - beta;
  }
  out.tail_mass = remaining;
  return out;
}

PriorDraw sample_draw(double alpha, int truncation, const BaseMeasure& base, std::uint64_t seed) {
  base.validate();
  Rng root(seed);
  Rng stick_rng = root.split(0);
  Rng atom_rng = root.split(1);

  PriorDraw draw;
  draw.sticks.alpha = alpha;
  draw.sticks.betas = sample_betas(alpha, truncation, stick_rng);
  auto weights = weights_from_betas(draw.sticks.betas);
  draw.sticks.weights = std::move(weights.weights);
  draw.sticks.tail_mass = weights.tail_mass;

  const double sd = std::sqrt(base.tau2);
  draw.components.reserve(static_cast<std::size_t>(truncation));
  for (int i = 0; i < truncation; ++i) {
    GaussianComponent c{Eigen::VectorXd(base.mean0.size()), base.comp_cov};
    for (Eigen::Index j = 0; j < c.mean.size(); ++j) c.mean[j] = base.mean0[j] + sd * atom_rng.normal();
    draw.components.push_back(std::move(c));
  }
  return draw;
}

double expected_tail_mass(double alpha, int truncation) {
  require_alpha(alpha);
  if (truncation < 0) throw DomainError("truncation level must be non-negative");
  return std::pow(alpha / (1.0 + alpha), truncation);
}

double truncation_bound(double alpha, int truncation, double bound_constant) {
  require_alpha(alpha);
  return bound_constant * std::exp(-static_cast<double>(truncation) / alpha);
}

int choose_truncation(double alpha, double delta, double bound_constant) {
  require_alpha(alpha);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(bound_constant > 0.0) || !std::isfinite(bound_constant)) {
    throw DomainError("bound constant C must be positive");
  }
  if (delta >= bound_constant) return 1;
  int t = std::max(1, static_cast<int>(std::ceil(alpha * std::log(bound_constant / delta))));
  // ceil of a rounded logarithm can land one off either way.
  while (truncation_bound(alpha, t, bound_constant) > delta) ++t;
  while (t > 1 && truncation_bound(alpha, t - 1, bound_constant) <= delta) --t;
  return t;
}

double CellMoments::mean_z() const { return standardized(mean - base_mass, mean_se); }

double CellMoments::var_z() const { return standardized(var - expected_var, var_se); }

bool DirichletCheckReport::within(double z_max) const {
  return std::all_of(cells.begin(), cells.end(), [z_max](const CellMoments& c) {
    return c.mean_z() <= z_max && c.var_z() <= z_max;
  });
}

DirichletCheckReport dirichlet_marginal_check(double alpha, const BaseMeasure& base,
                                              std::span<const Interval> partition, int n_draws,
                                              int truncation_proxy, std::uint64_t seed) {
  require_alpha(alpha);
  base.validate();
  if (base.dim() != 1) throw DimensionError("Dirichlet marginal check needs a 1-d base measure");
  validate_partition(partition);
  if (n_draws < 2) throw DomainError("need at least two draws");
  if (truncation_proxy < 1 || expected_tail_mass(alpha, truncation_proxy) >= 1e-8) {
    throw DomainError("truncation proxy too small: expected tail mass must be below 1e-8");
  }

  const std::size_t r = partition.size();
  std::vector<double> masses(r);
  for (std::size_t c = 0; c < r; ++c) masses[c] = base_mass(base, partition[c]);

  // values[c][n] = G(A_c) on draw n
  std::vector<std::vector<double>> values(r, std::vector<double>(static_cast<std::size_t>(n_draws)));
  for (int n = 0; n < n_draws; ++n) {
    const PriorDraw draw = sample_draw(alpha, truncation_proxy, base, mix_seed(seed, static_cast<std::uint64_t>(n)));
    std::vector<double> g(r, 0.0);
    for (std::size_t i = 0; i < draw.components.size(); ++i) {
      const double x = draw.components[i].mean[0];
      for (std::size_t c = 0; c < r; ++c) {
        if (x >= partition[c].lo && x < partition[c].hi) {
          g[c] += draw.sticks.weights[i];
          break;
        }
      }
    }
    for (std::size_t c = 0; c < r; ++c) {
      values[c][static_cast<std::size_t>(n)] = g[c] + draw.sticks.tail_mass * masses[c];
    }
  }

  DirichletCheckReport report;
  report.alpha = alpha;
  report.n_draws = n_draws;
  report.truncation = truncation_proxy;
  const double n = static_cast<double>(n_draws);
  for (std::size_t c = 0; c < r; ++c) {
    const auto& v = values[c];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (const double x : v) {
      const double d2 = (x - mean) * (x - mean);
      m2 += d2;
      m4 += d2 * d2;
    }
    const double var = m2 / (n - 1.0);
    const double central4 = m4 / n;
    const double pop_var = m2 / n;

    CellMoments cell;
    cell.cell = partition[c];
    cell.base_mass = masses[c];
    cell.mean = mean;
    cell.mean_se = std::sqrt(var / n);
    cell.var = var;
    cell.var_se = std::sqrt(std::max(0.0, central4 - pop_var * pop_var) / n);
    cell.expected_var = masses[c] * (1.0 - masses[c]) / (alpha + 1.0);
    report.cells.push_back(cell);
  }
  return report;
}

}  // namespace dpme
