#pragma once

// End-to-end fitting of a truncated DP mixture by kernel mean matching:
// choose atoms, build the Gram statistics, solve for the weights, and
// recover per-observation latent assignments afterwards.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpme/rkhs_embedding.hpp"
#include "dpme/simplex_qp.hpp"
#include "dpme/types.hpp"

namespace dpme {

enum class AtomStrategy { sample_g0, kmeans, subsample };

std::string_view to_string(AtomStrategy strategy) noexcept;
/// Accepts "sample" / "sample_g0", "kmeans", "subsample"; throws DomainError otherwise.
AtomStrategy parse_atom_strategy(std::string_view name);

struct FitConfig {
  double alpha = 1.0;
  std::optional<int> trunc;  // nullopt: choose_truncation(alpha, delta, 1)
  double delta = 1e-3;
  AtomStrategy atom_strategy = AtomStrategy::kmeans;
  std::optional<double> epsilon;     // nullopt: default_epsilon(S)
  std::optional<double> bandwidth2;  // nullopt: median heuristic
  double comp_cov_scale = 0.3;
  double weight_floor = 1e-3;
  std::uint64_t seed = 0;
  SolverOptions solver;

  void validate() const;
  int resolved_truncation() const;
};

struct LatentAssignment {
  std::vector<int> assignments;
  Eigen::MatrixXd responsibilities;  // m x T, rows sum to 1
  std::vector<int> flagged_rows;     // rows resolved by the nearest-atom fallback
};

struct FitResult {
  TruncatedDPMM model;
  QPSolution qp;
  EmbeddingGram gram;
  KernelConfig kernel;
  double epsilon = 0.0;
  double mmd2 = 0.0;
  LatentAssignment latents;
  int effective_T = 0;
  double weight_floor = 0.0;
  double truncation_bound = 0.0;  // exp(-T / alpha)
};

/// T atoms with cov_diag = comp_cov_scale * (per-dimension data variance).
std::vector<GaussianComponent> init_atoms(const Dataset& data, const FitConfig& cfg);

FitResult fit(const Dataset& data, const FitConfig& cfg);

/// Same pipeline with caller-supplied atoms; cfg.trunc and the atom
/// strategy are ignored.
FitResult fit_with_atoms(const Dataset& data, std::vector<GaussianComponent> atoms, const FitConfig& cfg);

/// Posterior component responsibilities pi_i f_i(x) / sum_j pi_j f_j(x) in
/// the log domain. Argmax ties go to the lowest index. A row whose joint
/// densities all fall below the smallest normal double is flagged and
/// assigned one-hot to the nearest atom (Mahalanobis) with positive weight.
LatentAssignment assign_latents(const TruncatedDPMM& model, const Dataset& data);

int effective_components(const TruncatedDPMM& model, double weight_floor);

}  // namespace dpme
