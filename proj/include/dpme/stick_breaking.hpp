#pragma once

// Stick-breaking construction of Dirichlet Process draws, exact tail-mass
// quantities and truncation-level selection.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dpme/rng.hpp"
#include "dpme/types.hpp"

namespace dpme {

/// A truncated stick-breaking draw.
///
/// weights[i] = betas[i] * prod_{k<i} (1 - betas[k]) and
/// tail_mass = prod_i (1 - betas[i]) = 1 - sum(weights) up to round-off.
struct StickBreakingDraw {
  double alpha = 1.0;
  std::vector<double> betas;
  std::vector<double> weights;
  double tail_mass = 1.0;
};

/// Base measure G_0 over component parameters: component means are
/// N(mean0, tau2 * I) and every component shares the covariance comp_cov.
struct BaseMeasure {
  Eigen::VectorXd mean0;
  double tau2 = 1.0;
  Eigen::VectorXd comp_cov;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean0.size()); }
  void validate() const;

  /// Isotropic base measure in `dim` dimensions.
  static BaseMeasure isotropic(std::size_t dim, double mean0, double tau2, double comp_var);
};

struct StickWeights {
  std::vector<double> weights;
  double tail_mass = 1.0;
};

struct PriorDraw {
  StickBreakingDraw sticks;
  std::vector<GaussianComponent> components;
};

/// T independent Beta(1, alpha) variates, sampled as 1 - U^(1/alpha).
std::vector<double> sample_betas(double alpha, int truncation, Rng& rng);
std::vector<double> sample_betas(double alpha, int truncation, std::uint64_t seed);

/// Single left-to-right pass carrying the remaining stick length.
StickWeights weights_from_betas(std::span<const double> betas);

/// Truncated prior draw: sticks from seed stream 0, component means from
/// stream 1, so changing T does not reshuffle the betas already drawn.
PriorDraw sample_draw(double alpha, int truncation, const BaseMeasure& base, std::uint64_t seed);

/// E[1 - sum_{i<=T} pi_i] = (alpha / (1 + alpha))^T.
double expected_tail_mass(double alpha, int truncation);

/// Smallest T >= 1 with C * exp(-T / alpha) <= delta.
int choose_truncation(double alpha, double delta, double bound_constant = 1.0);

/// C * exp(-T / alpha).
double truncation_bound(double alpha, int truncation, double bound_constant = 1.0);

/// Half-open interval [lo, hi) on the real line; lo may be -inf and hi +inf.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct CellMoments {
  Interval cell;
  double base_mass = 0.0;  // G_0(A)
  double mean = 0.0;       // empirical mean of G(A)
  double mean_se = 0.0;
  double var = 0.0;  // empirical variance of G(A)
  double var_se = 0.0;
  double expected_var = 0.0;  // G_0(A)(1 - G_0(A)) / (alpha + 1)

  /// |mean - base_mass| in units of mean_se (0 when both are exactly equal).
  double mean_z() const;
  double var_z() const;
};

struct DirichletCheckReport {
  double alpha = 1.0;
  int n_draws = 0;
  int truncation = 0;
  std::vector<CellMoments> cells;

  bool within(double z_max) const;
};

/// Empirical moments of (G(A_1), ..., G(A_r)) over stick-breaking draws,
/// for comparison with the Dirichlet marginals a DP must have. Requires a
/// one-dimensional base measure; the partition is over component means.
/// Mass beyond the truncation is spread over cells in proportion to G_0.
DirichletCheckReport dirichlet_marginal_check(double alpha, const BaseMeasure& base,
                                              std::span<const Interval> partition, int n_draws,
                                              int truncation_proxy, std::uint64_t seed);

}  // namespace dpme
