#pragma once

// Gaussian-kernel mean embeddings of diagonal Gaussian mixtures and of
// empirical samples, the Gram statistics of the weight QP, and the squared
// maximum mean discrepancy between a truncated mixture and the data.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dpme/stick_breaking.hpp"
#include "dpme/types.hpp"

namespace dpme {

/// Gaussian RBF kernel k(x, y) = exp(-|x - y|^2 / (2 bandwidth2)).
/// sup_x k(x, x) = 1, which is the constant used in the truncation bound.
struct KernelConfig {
  double bandwidth2 = 1.0;

  void validate() const;
};

/// Sufficient statistics of the weight QP:
///   S_ij = <mu[f_i], mu[f_j]>,  R_j = <mu_X, mu[f_j]>,  data_term = <mu_X, mu_X>.
struct EmbeddingGram {
  Eigen::MatrixXd S;
  Eigen::VectorXd R;
  double data_term = 0.0;
};

/// A truncated DP mixture: weights on the simplex over T Gaussian atoms.
struct TruncatedDPMM {
  double alpha = 1.0;
  Eigen::VectorXd weights;
  std::vector<GaussianComponent> components;

  int truncation() const noexcept { return static_cast<int>(components.size()); }

  /// Throws DomainError unless weights lie on the simplex within 1e-9 and
  /// match the number of components.
  void validate() const;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

double kernel_eval(std::span<const double> x, std::span<const double> y, const KernelConfig& cfg);
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelConfig& cfg);

/// Closed-form <mu[f], mu[g]>: per dimension
/// sqrt(s / (s + v_f + v_g)) * exp(-(m_f - m_g)^2 / (2 (s + v_f + v_g))), multiplied over d.
double component_inner(const GaussianComponent& f, const GaussianComponent& g, const KernelConfig& cfg);

/// Closed-form <mu_X, mu[f]> averaged over the data rows.
double component_data_inner(const GaussianComponent& f, const Dataset& data, const KernelConfig& cfg);

/// |mu_X|^2 = (1/m^2) sum_ij k(x_i, x_j).
double empirical_self_term(const Dataset& data, const KernelConfig& cfg);

EmbeddingGram assemble_gram(std::span<const GaussianComponent> components, const Dataset& data,
                            const KernelConfig& cfg);

/// data_term - 2 R.pi + pi.S.pi, with round-off in (-1e-12, 0) clamped to 0.
/// Throws InvariantError for anything more negative.
double mmd_squared(const Eigen::VectorXd& weights, const EmbeddingGram& gram);
double mmd_squared(const TruncatedDPMM& model, const EmbeddingGram& gram);

/// Monte Carlo estimate of <mu[f], mu[g]> from paired samples x ~ f, y ~ g.
McEstimate mc_component_inner(const GaussianComponent& f, const GaussianComponent& g,
                              const KernelConfig& cfg, int n_samples, std::uint64_t seed);

/// Monte Carlo estimate of <mu_X, mu[f]>: y ~ f, averaged exactly over the data.
McEstimate mc_component_data_inner(const GaussianComponent& f, const Dataset& data,
                                   const KernelConfig& cfg, int n_samples, std::uint64_t seed);

/// Monte Carlo estimate of the squared MMD between a mixture and the data,
/// using y, y' ~ model independently and the exact data self-term.
McEstimate mc_mmd_squared(const TruncatedDPMM& model, const Dataset& data, const KernelConfig& cfg,
                          int n_samples, std::uint64_t seed);

/// Draws one point from a diagonal Gaussian.
Eigen::VectorXd sample_component(const GaussianComponent& f, Rng& rng);

/// sigma^2 = median(pairwise distance)^2 / 2. Uses all pairs when there are
/// at most 10^4 of them, otherwise 10^4 pairs drawn with a fixed seed.
double median_heuristic_bandwidth(const Dataset& data);

struct DecayReport {
  std::vector<int> truncations;
  std::vector<double> mean_gap;     // average over draws of the squared RKHS gap
  std::vector<double> bound;        // exp(-T / alpha), C = 1
  double slope = 0.0;               // least-squares slope of log(mean_gap) vs T
  bool monotone_per_draw = true;    // gap non-increasing in T on every draw
  int reference_truncation = 0;
  int n_draws = 0;
};

/// Squared distance between the embedding truncated at T and the embedding
/// truncated at T_ref (the proxy for the infinite mixture), averaged over
/// prior draws, for each T in `truncations`.
DecayReport truncation_decay_check(double alpha, const BaseMeasure& base, const KernelConfig& cfg,
                                   std::span<const int> truncations, int reference_truncation,
                                   int n_draws, std::uint64_t seed);

}  // namespace dpme
