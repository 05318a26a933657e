#include "dpme/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "dpme/error.hpp"
#include "dpme/kmeans.hpp"
#include "dpme/rng.hpp"
#include "dpme/simd/kernels.hpp"
#include "dpme/stick_breaking.hpp"

namespace dpme {
namespace {

// Seed streams, so each stochastic stage is independent of the others.
constexpr std::uint64_t kAtomStream = 1;

Eigen::VectorXd atom_covariance(const Dataset& data, double scale) {
  const Eigen::VectorXd var = data.variance();
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    if (!(var[j] > 0.0)) {
      throw DataError("data has zero variance in dimension " + std::to_string(j + 1) +
                      "; atom covariance would be degenerate");
    }
  }
  return scale * var;
}

}  // namespace

std::string_view to_string(AtomStrategy strategy) noexcept {
  switch (strategy) {
    case AtomStrategy::sample_g0:
      return "sample";
    case AtomStrategy::kmeans:
      return "kmeans";
    case AtomStrategy::subsample:
      return "subsample";
  }
  return "unknown";
}

AtomStrategy parse_atom_strategy(std::string_view name) {
  if (name == "sample" || name == "sample_g0") return AtomStrategy::sample_g0;
  if (name == "kmeans") return AtomStrategy::kmeans;
  if (name == "subsample") return AtomStrategy::subsample;
  throw DomainError("unknown atom strategy '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  if (trunc && *trunc < 1) throw DomainError("truncation level must be at least 1");
  if (!trunc && !(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (epsilon && (!(*epsilon >= 0.0) || !std::isfinite(*epsilon))) {
    throw DomainError("epsilon must be non-negative");
  }
  if (bandwidth2 && (!(*bandwidth2 > 0.0) || !std::isfinite(*bandwidth2))) {
    throw DomainError("bandwidth2 must be positive");
  }
  if (!(comp_cov_scale > 0.0) || !std::isfinite(comp_cov_scale)) {
    throw DomainError("comp_cov_scale must be positive");
  }
  if (!(weight_floor >= 0.0 && weight_floor < 1.0)) throw DomainError("weight_floor must lie in [0, 1)");
}

int FitConfig::resolved_truncation() const {
  return trunc ? *trunc : choose_truncation(alpha, delta, 1.0);
}

std::vector<GaussianComponent> init_atoms(const Dataset& data, const FitConfig& cfg) {
  cfg.validate();
  const int t = cfg.resolved_truncation();
  const Eigen::VectorXd cov = atom_covariance(data, cfg.comp_cov_scale);
  const auto d = static_cast<Eigen::Index>(data.dim());
  Rng rng = Rng(cfg.seed).split(kAtomStream);

  std::vector<GaussianComponent> atoms;
  atoms.reserve(static_cast<std::size_t>(t));
  switch (cfg.atom_strategy) {
    case AtomStrategy::sample_g0: {
      // Empirical plug-in for G_0: N(data mean, tau2 I), tau2 = mean variance.
      const Eigen::VectorXd center = data.mean();
      const double sd = std::sqrt(data.variance().mean());
      for (int i = 0; i < t; ++i) {
        Eigen::VectorXd mean(d);
        for (Eigen::Index j = 0; j < d; ++j) mean[j] = center[j] + sd * rng.normal();
        atoms.push_back({std::move(mean), cov});
      }
      break;
    }
    case AtomStrategy::kmeans: {
      const KMeansResult km = kmeans(data, t, {20, 100, rng.next_u64()});
      for (int i = 0; i < t; ++i) atoms.push_back({km.centroids.row(i).transpose(), cov});
      break;
    }
    case AtomStrategy::subsample: {
      const std::size_t m = data.size();
      if (static_cast<std::size_t>(t) > m) {
        throw DataError("subsample needs T <= m (T = " + std::to_string(t) + ", m = " + std::to_string(m) + ")");
      }
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = 0; i < static_cast<std::size_t>(t); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
        std::swap(order[i], order[j]);
        atoms.push_back({data.row(order[i]), cov});
      }
      break;
    }
  }
  return atoms;
}

FitResult fit(const Dataset& data, const FitConfig& cfg) {
  return fit_with_atoms(data, init_atoms(data, cfg), cfg);
}

FitResult fit_with_atoms(const Dataset& data, std::vector<GaussianComponent> atoms, const FitConfig& cfg) {
  cfg.validate();
  if (atoms.empty()) throw DomainError("fit needs at least one atom");

  FitResult result;
  result.kernel.bandwidth2 = cfg.bandwidth2 ? *cfg.bandwidth2 : median_heuristic_bandwidth(data);
  result.gram = assemble_gram(atoms, data, result.kernel);
  result.epsilon = cfg.epsilon ? *cfg.epsilon : default_epsilon(result.gram.S);

  const QPProblem problem = QPProblem::from_gram(result.gram, result.epsilon);
  result.qp = solve(problem, cfg.solver);

  result.model.alpha = cfg.alpha;
  result.model.weights = result.qp.pi;
  result.model.components = std::move(atoms);
  result.model.validate();

  result.mmd2 = mmd_squared(result.model, result.gram);
  result.latents = assign_latents(result.model, data);
  result.weight_floor = cfg.weight_floor;
  result.effective_T = effective_components(result.model, cfg.weight_floor);
  result.truncation_bound = truncation_bound(cfg.alpha, result.model.truncation());
  return result;
}

LatentAssignment assign_latents(const TruncatedDPMM& model, const Dataset& data) {
  const auto t = static_cast<std::size_t>(model.truncation());
  if (t == 0 || static_cast<std::size_t>(model.weights.size()) != t) {
    throw DimensionError("model weights do not match its components");
  }
  if (!(model.weights.array() > 0.0).any()) throw DomainError("model has zero weight everywhere");

  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const simd::PointBlock block{data.points().data(), m, d, 0, m};
  const auto& table = simd::kernels();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // log_joint(k, i) = log pi_i + log f_i(x_k); mahalanobis(k, i) for the fallback.
  Eigen::MatrixXd log_joint(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
  Eigen::MatrixXd mahalanobis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
  std::vector<double> half_inv(d);
  std::vector<double> buffer(m);
  for (std::size_t i = 0; i < t; ++i) {
    const auto& c = model.components[i];
    if (c.dim() != d) throw DimensionError("component dimension differs from the data");
    c.validate();
    double log_norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = c.cov_diag[static_cast<Eigen::Index>(j)];
      half_inv[j] = 0.5 / v;
      log_norm += 0.5 * std::log(2.0 * std::numbers::pi * v);
    }
    table.weighted_sq_dist(block, {c.mean.data(), d}, half_inv, buffer);
    const double w = model.weights[static_cast<Eigen::Index>(i)];
    const double log_w = w > 0.0 ? std::log(w) : kNegInf;
    for (std::size_t k = 0; k < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const auto ii = static_cast<Eigen::Index>(i);
      mahalanobis(kk, ii) = 2.0 * buffer[k];
      log_joint(kk, ii) = log_w - log_norm - buffer[k];
    }
  }

  LatentAssignment out;
  out.assignments.resize(m);
  out.responsibilities.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
  const double underflow = std::log(std::numeric_limits<double>::min());
  std::vector<double> row(t);
  for (std::size_t k = 0; k < m; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double peak = log_joint.row(kk).maxCoeff();
    if (peak < underflow) {
      std::size_t nearest = t;
      for (std::size_t i = 0; i < t; ++i) {
        if (!(model.weights[static_cast<Eigen::Index>(i)] > 0.0)) continue;
        if (nearest == t || mahalanobis(kk, static_cast<Eigen::Index>(i)) <
                                mahalanobis(kk, static_cast<Eigen::Index>(nearest))) {
          nearest = i;
        }
      }
      out.responsibilities.row(kk).setZero();
      out.responsibilities(kk, static_cast<Eigen::Index>(nearest)) = 1.0;
      out.assignments[k] = static_cast<int>(nearest);
      out.flagged_rows.push_back(static_cast<int>(k));
      continue;
    }
    for (std::size_t i = 0; i < t; ++i) row[i] = log_joint(kk, static_cast<Eigen::Index>(i)) - peak;
    table.exp_inplace(row);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < t; ++i) {
      row[i] /= total;
      out.responsibilities(kk, static_cast<Eigen::Index>(i)) = row[i];
      if (row[i] > row[best]) best = i;
    }
    out.assignments[k] = static_cast<int>(best);
  }
  return out;
}

int effective_components(const TruncatedDPMM& model, double weight_floor) {
  if (!(weight_floor >= 0.0 && weight_floor < 1.0)) throw DomainError("weight_floor must lie in [0, 1)");
  return static_cast<int>((model.weights.array() > weight_floor).count());
}

}  // namespace dpme
