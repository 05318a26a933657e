#pragma once

// min 1/2 pi'Q pi - r'pi  subject to  sum(pi) = 1, pi >= 0,
// with Q = S + eps I from the embedding Gram statistics.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dpme/rkhs_embedding.hpp"

namespace dpme {

struct QPProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd r;
  double epsilon = 0.0;

  int size() const noexcept { return static_cast<int>(r.size()); }

  /// Q = S + epsilon I, r = R.
  static QPProblem from_gram(const EmbeddingGram& gram, double epsilon);

  double objective(const Eigen::VectorXd& pi) const;

  /// Throws DimensionError on shape mismatch, DomainError on NaN entries
  /// or asymmetry beyond 1e-12 (relative to the largest |Q_ij|).
  void validate() const;
};

struct QPSolution {
  Eigen::VectorXd pi;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every accepted step, starting with the warm start.
  std::vector<double> objective_history;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 50000;
  std::uint64_t seed = 0;
};

/// Default regularization 1e-6 * trace(S) / T.
double default_epsilon(const Eigen::MatrixXd& S);

/// Euclidean projection onto the probability simplex (sort and threshold).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Feasibility plus complementary slackness against lambda = min_i g_i,
/// g = Q pi - r. Zero exactly at the optimum of the convex problem.
double kkt_residual(const QPProblem& problem, const Eigen::VectorXd& pi);

/// Largest eigenvalue of a symmetric PSD matrix by 30 power iterations
/// from a seeded start vector.
double power_iteration_max_eigenvalue(const Eigen::MatrixXd& Q, std::uint64_t seed, int iterations = 30);

/// Accelerated projected gradient with monotone restart, warm-started at
/// the uniform point and finished with an active-set polish.
QPSolution solve(const QPProblem& problem, const SolverOptions& options = {});

/// Exhaustive search over the simplex lattice with spacing grid_step.
/// Test oracle; T <= 4 only.
QPSolution brute_force_solve(const QPProblem& problem, double grid_step);

}  // namespace dpme
