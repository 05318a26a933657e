#include "dpme/rkhs_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dpme/error.hpp"
#include "dpme/simd/kernels.hpp"

namespace dpme {
namespace {

constexpr std::uint64_t kMedianPairSeed = 0x6d656469616e5f31ULL;
constexpr std::size_t kMaxMedianPairs = 10000;

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

simd::PointBlock block_of(const Dataset& data, std::size_t begin, std::size_t end) {
  return {data.points().data(), data.size(), data.dim(), begin, end};
}

McEstimate summarize(double sum, double sum_sq, int n) {
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0));
  return {mean, std::sqrt(var / nn)};
}

// sum_k k(x_k, y) over all data rows, for the RBF kernel with bandwidth s.
double kernel_row_sum(const Dataset& data, std::span<const double> y, std::span<const double> scale) {
  return simd::kernels().gauss_sum(block_of(data, 0, data.size()), y, scale);
}

}  // namespace

void KernelConfig::validate() const {
  if (!(bandwidth2 > 0.0) || !std::isfinite(bandwidth2)) {
    throw DomainError("kernel bandwidth2 must be positive and finite");
  }
}

void TruncatedDPMM::validate() const {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (static_cast<std::size_t>(weights.size()) != components.size()) {
    throw DimensionError("model has " + std::to_string(weights.size()) + " weights but " +
                         std::to_string(components.size()) + " components");
  }
  if (components.empty()) throw DomainError("model has no components");
  if ((weights.array() < -1e-9).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw DomainError("model weights are not on the probability simplex");
  }
  for (const auto& c : components) c.validate();
}

double kernel_eval(std::span<const double> x, std::span<const double> y, const KernelConfig& cfg) {
  require_same_dim(x.size(), y.size(), "kernel_eval");
  cfg.validate();
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - y[j]) * (x[j] - y[j]);
  return std::exp(-sq / (2.0 * cfg.bandwidth2));
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelConfig& cfg) {
  return kernel_eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                     std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), cfg);
}

double component_inner(const GaussianComponent& f, const GaussianComponent& g, const KernelConfig& cfg) {
  require_same_dim(f.dim(), g.dim(), "component_inner");
  if ((f.cov_diag.array() <= 0.0).any() || (g.cov_diag.array() <= 0.0).any()) {
    throw DomainError("component variances must be positive");
  }
  const double s = cfg.bandwidth2;
  double coef = 1.0;
  double exponent = 0.0;
  for (Eigen::Index j = 0; j < f.mean.size(); ++j) {
    const double total = s + f.cov_diag[j] + g.cov_diag[j];
    const double diff = f.mean[j] - g.mean[j];
    coef *= std::sqrt(s / total);
    exponent += diff * diff / (2.0 * total);
  }
  return coef * std::exp(-exponent);
}

double component_data_inner(const GaussianComponent& f, const Dataset& data, const KernelConfig& cfg) {
  require_same_dim(f.dim(), data.dim(), "component_data_inner");
  if ((f.cov_diag.array() <= 0.0).any()) throw DomainError("component variances must be positive");
  const double s = cfg.bandwidth2;
  std::vector<double> scale(f.dim());
  double coef = 1.0;
  for (std::size_t j = 0; j < f.dim(); ++j) {
    const double total = s + f.cov_diag[static_cast<Eigen::Index>(j)];
    coef *= std::sqrt(s / total);
    scale[j] = 1.0 / (2.0 * total);
  }
  const std::span<const double> center(f.mean.data(), f.dim());
  return coef * kernel_row_sum(data, center, scale) / static_cast<double>(data.size());
}

double empirical_self_term(const Dataset& data, const KernelConfig& cfg) {
  const std::size_t m = data.size();
  const std::vector<double> scale(data.dim(), 1.0 / (2.0 * cfg.bandwidth2));
  const auto& table = simd::kernels();
  double off_diagonal = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Eigen::VectorXd xi = data.row(i);
    off_diagonal += table.gauss_sum(block_of(data, i + 1, m), {xi.data(), data.dim()}, scale);
  }
  const double md = static_cast<double>(m);
  return (md + 2.0 * off_diagonal) / (md * md);
}

EmbeddingGram assemble_gram(std::span<const GaussianComponent> components, const Dataset& data,
                            const KernelConfig& cfg) {
  cfg.validate();
  const auto t = static_cast<Eigen::Index>(components.size());
  if (t == 0) throw DomainError("assemble_gram needs at least one component");
  for (const auto& c : components) {
    c.validate();
    require_same_dim(c.dim(), data.dim(), "assemble_gram");
  }

  EmbeddingGram gram;
  gram.S.resize(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = i; j < t; ++j) {
      const double v = component_inner(components[static_cast<std::size_t>(i)],
                                       components[static_cast<std::size_t>(j)], cfg);
      gram.S(i, j) = v;
      gram.S(j, i) = v;
    }
  }
  gram.R.resize(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    gram.R[i] = component_data_inner(components[static_cast<std::size_t>(i)], data, cfg);
  }
  gram.data_term = empirical_self_term(data, cfg);
  return gram;
}

double mmd_squared(const Eigen::VectorXd& weights, const EmbeddingGram& gram) {
  if (weights.size() != gram.R.size() || gram.S.rows() != gram.R.size()) {
    throw DimensionError("mmd_squared: weight vector does not match the Gram statistics");
  }
  const double value = gram.data_term - 2.0 * gram.R.dot(weights) + weights.dot(gram.S * weights);
  if (value >= 0.0) return value;
  if (value > -1e-12) return 0.0;
  throw InvariantError("squared MMD is negative beyond round-off: " + std::to_string(value));
}

double mmd_squared(const TruncatedDPMM& model, const EmbeddingGram& gram) {
  model.validate();
  return mmd_squared(model.weights, gram);
}

Eigen::VectorXd sample_component(const GaussianComponent& f, Rng& rng) {
  Eigen::VectorXd x(f.mean.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = f.mean[j] + std::sqrt(f.cov_diag[j]) * rng.normal();
  return x;
}

McEstimate mc_component_inner(const GaussianComponent& f, const GaussianComponent& g,
                              const KernelConfig& cfg, int n_samples, std::uint64_t seed) {
  require_same_dim(f.dim(), g.dim(), "mc_component_inner");
  if (n_samples < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 samples");
  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd x = sample_component(f, rng);
    const Eigen::VectorXd y = sample_component(g, rng);
    const double k = kernel_eval(x, y, cfg);
    sum += k;
    sum_sq += k * k;
  }
  return summarize(sum, sum_sq, n_samples);
}

McEstimate mc_component_data_inner(const GaussianComponent& f, const Dataset& data,
                                   const KernelConfig& cfg, int n_samples, std::uint64_t seed) {
  require_same_dim(f.dim(), data.dim(), "mc_component_data_inner");
  if (n_samples < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 samples");
  Rng rng(seed);
  const std::vector<double> scale(data.dim(), 1.0 / (2.0 * cfg.bandwidth2));
  const double inv_m = 1.0 / static_cast<double>(data.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd y = sample_component(f, rng);
    const double k = kernel_row_sum(data, {y.data(), data.dim()}, scale) * inv_m;
    sum += k;
    sum_sq += k * k;
  }
  return summarize(sum, sum_sq, n_samples);
}

McEstimate mc_mmd_squared(const TruncatedDPMM& model, const Dataset& data, const KernelConfig& cfg,
                          int n_samples, std::uint64_t seed) {
  model.validate();
  if (n_samples < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 samples");
  Rng rng(seed);
  std::vector<double> cumulative(model.components.size());
  std::partial_sum(model.weights.data(), model.weights.data() + model.weights.size(), cumulative.begin());
  auto pick = [&]() {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
  };

  const double data_term = empirical_self_term(data, cfg);
  const std::vector<double> scale(data.dim(), 1.0 / (2.0 * cfg.bandwidth2));
  const double inv_m = 1.0 / static_cast<double>(data.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd y1 = sample_component(model.components[pick()], rng);
    const Eigen::VectorXd y2 = sample_component(model.components[pick()], rng);
    const double cross = 0.5 * inv_m *
                         (kernel_row_sum(data, {y1.data(), data.dim()}, scale) +
                          kernel_row_sum(data, {y2.data(), data.dim()}, scale));
    const double v = kernel_eval(y1, y2, cfg) - 2.0 * cross + data_term;
    sum += v;
    sum_sq += v * v;
  }
  return summarize(sum, sum_sq, n_samples);
}

double median_heuristic_bandwidth(const Dataset& data) {
  const std::size_t m = data.size();
  if (m < 2) throw DataError("median heuristic needs at least two points");
  const std::vector<double> unit(data.dim(), 1.0);
  const auto& table = simd::kernels();

  std::vector<double> sq;
  const std::size_t all_pairs = m * (m - 1) / 2;
  if (all_pairs <= kMaxMedianPairs) {
    sq.resize(all_pairs);
    std::size_t offset = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const Eigen::VectorXd xi = data.row(i);
      const std::size_t n = m - i - 1;
      table.weighted_sq_dist(block_of(data, i + 1, m), {xi.data(), data.dim()}, unit,
                             {sq.data() + offset, n});
      offset += n;
    }
  } else {
    Rng rng(kMedianPairSeed);
    sq.reserve(kMaxMedianPairs);
    while (sq.size() < kMaxMedianPairs) {
      const auto i = static_cast<Eigen::Index>(rng.below(m));
      const auto j = static_cast<Eigen::Index>(rng.below(m));
      if (i == j) continue;
      sq.push_back((data.points().row(i) - data.points().row(j)).squaredNorm());
    }
  }
  if (*std::max_element(sq.begin(), sq.end()) == 0.0) throw DataError("all data points are identical");

  std::vector<double> dist(sq.size());
  std::transform(sq.begin(), sq.end(), dist.begin(), [](double v) { return std::sqrt(v); });
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  if (median == 0.0) throw DataError("median pairwise distance is zero; bandwidth undefined");
  return median * median / 2.0;
}

DecayReport truncation_decay_check(double alpha, const BaseMeasure& base, const KernelConfig& cfg,
                                   std::span<const int> truncations, int reference_truncation,
                                   int n_draws, std::uint64_t seed) {
  cfg.validate();
  base.validate();
  if (truncations.empty()) throw DomainError("no truncation levels given");
  if (!std::is_sorted(truncations.begin(), truncations.end()) ||
      std::adjacent_find(truncations.begin(), truncations.end()) != truncations.end() ||
      truncations.front() < 0) {
    throw DomainError("truncation levels must be non-negative and strictly increasing");
  }
  if (reference_truncation < 4 * truncations.back()) {
    throw DomainError("reference truncation must be at least 4x the largest tested level");
  }
  if (expected_tail_mass(alpha, reference_truncation) >= 1e-10) {
    throw DomainError("reference truncation leaves expected tail mass >= 1e-10");
  }
  if (n_draws < 1) throw DomainError("need at least one draw");

  const std::size_t nt = truncations.size();
  const auto tref = static_cast<std::size_t>(reference_truncation);
  DecayReport report;
  report.truncations.assign(truncations.begin(), truncations.end());
  report.mean_gap.assign(nt, 0.0);
  report.reference_truncation = reference_truncation;
  report.n_draws = n_draws;

  Eigen::MatrixXd s(static_cast<Eigen::Index>(tref), static_cast<Eigen::Index>(tref));
  std::vector<double> gap_at(tref + 1);
  for (int n = 0; n < n_draws; ++n) {
    const PriorDraw draw =
        sample_draw(alpha, reference_truncation, base, mix_seed(seed, static_cast<std::uint64_t>(n)));
    const auto& w = draw.sticks.weights;
    for (std::size_t i = 0; i < tref; ++i) {
      for (std::size_t j = i; j < tref; ++j) {
        const double v = component_inner(draw.components[i], draw.components[j], cfg);
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    }
    // gap_at[t] = |sum_{i >= t} w_i mu_i|^2, built from the far end inward:
    // gap_at[t] = gap_at[t+1] + w_t^2 S_tt + 2 w_t sum_{j>t} w_j S_tj.
    gap_at[tref] = 0.0;
    for (std::size_t t = tref; t-- > 0;) {
      double cross = 0.0;
      for (std::size_t j = t + 1; j < tref; ++j) cross += w[j] * s(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      const auto tt = static_cast<Eigen::Index>(t);
      gap_at[t] = gap_at[t + 1] + w[t] * (w[t] * s(tt, tt) + 2.0 * cross);
    }
    for (std::size_t k = 0; k < nt; ++k) {
      const auto t = static_cast<std::size_t>(truncations[k]);
      report.mean_gap[k] += gap_at[std::min(t, tref)];
      if (k > 0 && gap_at[std::min(t, tref)] > gap_at[std::min(static_cast<std::size_t>(truncations[k - 1]), tref)]) {
        report.monotone_per_draw = false;
      }
    }
  }

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < nt; ++k) {
    report.mean_gap[k] /= static_cast<double>(n_draws);
    report.bound.push_back(truncation_bound(alpha, truncations[k]));
    if (report.mean_gap[k] > 0.0) {
      const double t = truncations[k];
      const double y = std::log(report.mean_gap[k]);
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
      ++used;
    }
  }
  if (used >= 2) report.slope = (used * sty - st * sy) / (used * stt - st * st);
  return report;
}

}  // namespace dpme
