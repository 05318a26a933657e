#include "dpme/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "dpme/error.hpp"
#include "dpme/rng.hpp"

namespace dpme {
namespace {

constexpr int kPolishInterval = 25;

// Normalizes away round-off in sum(pi) after the projection.
void renormalize(Eigen::VectorXd& pi) {
  pi = pi.cwiseMax(0.0);
  const double total = pi.sum();
  if (total > 0.0) pi /= total;
}

// Solves the equality-constrained problem on the free set guessed from the
// current iterate: coordinates whose value is below their slackness gap
// g_i - lambda are pinned at zero. Returns false if the reduced KKT system
// is singular or its solution leaves the simplex.
bool polish(const QPProblem& problem, const Eigen::VectorXd& pi, Eigen::VectorXd& out) {
  const Eigen::VectorXd g = problem.Q * pi - problem.r;
  const double lambda = g.minCoeff();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] > g[i] - lambda) free.push_back(i);
  }
  if (free.empty()) return false;

  const auto f = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
  Eigen::VectorXd rhs(f + 1);
  for (Eigen::Index a = 0; a < f; ++a) {
    for (Eigen::Index b = 0; b < f; ++b) kkt(a, b) = problem.Q(free[a], free[b]);
    kkt(a, f) = -1.0;
    kkt(f, a) = 1.0;
    rhs[a] = problem.r[free[a]];
  }
  rhs[f] = 1.0;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;

  out = Eigen::VectorXd::Zero(pi.size());
  for (Eigen::Index a = 0; a < f; ++a) {
    if (sol[a] < -1e-14) return false;
    out[free[a]] = sol[a];
  }
  renormalize(out);
  return true;
}

}  // namespace

QPProblem QPProblem::from_gram(const EmbeddingGram& gram, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be non-negative");
  QPProblem problem;
  problem.Q = gram.S;
  problem.Q.diagonal().array() += epsilon;
  problem.r = gram.R;
  problem.epsilon = epsilon;
  problem.validate();
  return problem;
}

double QPProblem::objective(const Eigen::VectorXd& pi) const {
  return 0.5 * pi.dot(Q * pi) - r.dot(pi);
}

void QPProblem::validate() const {
  if (r.size() == 0) throw DimensionError("QP has no variables");
  if (Q.rows() != r.size() || Q.cols() != r.size()) {
    throw DimensionError("QP matrix is " + std::to_string(Q.rows()) + "x" + std::to_string(Q.cols()) +
                         " but the linear term has " + std::to_string(r.size()) + " entries");
  }
  if (!Q.allFinite() || !r.allFinite()) throw DomainError("QP inputs contain NaN or infinity");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("QP matrix is not symmetric");
  }
}

double default_epsilon(const Eigen::MatrixXd& S) {
  return 1e-6 * S.trace() / static_cast<double>(S.rows());
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw DomainError("cannot project an empty vector onto the simplex");
  if (!v.allFinite()) throw DomainError("cannot project a non-finite vector onto the simplex");

  std::vector<double> u(v.data(), v.data() + n);
  std::stable_sort(u.begin(), u.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (Eigen::Index rho = 1; rho <= n; ++rho) {
    prefix += u[static_cast<std::size_t>(rho - 1)];
    const double candidate = (1.0 - prefix) / static_cast<double>(rho);
    // Largest admissible rho wins; later ones overwrite earlier ones.
    if (u[static_cast<std::size_t>(rho - 1)] + candidate > 0.0) tau = candidate;
  }
  return (v.array() + tau).cwiseMax(0.0).matrix();
}

double kkt_residual(const QPProblem& problem, const Eigen::VectorXd& pi) {
  if (pi.size() != problem.r.size()) throw DimensionError("kkt_residual: pi has the wrong length");
  const double sum_gap = std::abs(pi.sum() - 1.0);
  const double neg = std::max(0.0, -pi.minCoeff());
  if (sum_gap > 1e-8 || neg > 1e-8) throw DomainError("kkt_residual: pi is not on the simplex");

  const Eigen::VectorXd g = problem.Q * pi - problem.r;
  const double lambda = g.minCoeff();
  double slack = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) slack = std::max(slack, pi[i] * (g[i] - lambda));
  return std::max({sum_gap, neg, slack});
}

double power_iteration_max_eigenvalue(const Eigen::MatrixXd& Q, std::uint64_t seed, int iterations) {
  Rng rng(seed);
  Eigen::VectorXd v(Q.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform_open();
  v.normalize();
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd w = Q * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return v.dot(Q * v);
}

QPSolution solve(const QPProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  if (options.max_iter < 1) throw DomainError("max_iter must be positive");

  const Eigen::Index n = problem.r.size();
  QPSolution sol;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double fx = problem.objective(x);
  double kkt = kkt_residual(problem, x);
  sol.objective_history.push_back(fx);

  // Accepts a polished point only when it certifies better and does not
  // raise the objective.
  auto try_polish = [&]() {
    Eigen::VectorXd candidate;
    if (!polish(problem, x, candidate)) return;
    const double fc = problem.objective(candidate);
    const double kc = kkt_residual(problem, candidate);
    if (kc < kkt && fc <= fx + 1e-14 * (1.0 + std::abs(fx))) {
      x = std::move(candidate);
      fx = fc;
      kkt = kc;
      sol.objective_history.push_back(fx);
    }
  };

  if (kkt > options.tol) try_polish();

  double lipschitz = 1.01 * power_iteration_max_eigenvalue(problem.Q, options.seed);
  if (!(lipschitz > std::numeric_limits<double>::min())) lipschitz = 1.0;
  double step = 1.0 / lipschitz;

  Eigen::VectorXd y = x;
  double momentum = 1.0;
  bool at_anchor = true;  // y == x, no extrapolation in play
  int it = 0;
  while (kkt > options.tol && it < options.max_iter) {
    ++it;
    const Eigen::VectorXd grad = problem.Q * y - problem.r;
    Eigen::VectorXd z = project_simplex(y - step * grad);
    renormalize(z);
    const double fz = problem.objective(z);
    if (fz <= fx) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = z + ((momentum - 1.0) / next) * (z - x);
      x = std::move(z);
      fx = fz;
      momentum = next;
      at_anchor = false;
      sol.objective_history.push_back(fx);
      kkt = kkt_residual(problem, x);
    } else {
      // A plain step from x that still increases f means the Lipschitz
      // estimate was too small.
      if (at_anchor) {
        lipschitz *= 2.0;
        step = 1.0 / lipschitz;
      }
      y = x;
      momentum = 1.0;
      at_anchor = true;
    }
    if (kkt > options.tol && it % kPolishInterval == 0) {
      try_polish();
      if (!at_anchor) {
        y = x;
        momentum = 1.0;
        at_anchor = true;
      }
    }
  }
  if (kkt > options.tol) try_polish();

  sol.pi = std::move(x);
  sol.objective = fx;
  sol.kkt_residual = kkt;
  sol.iterations = it;
  sol.converged = kkt <= options.tol;
  return sol;
}

QPSolution brute_force_solve(const QPProblem& problem, double grid_step) {
  problem.validate();
  const int t = problem.size();
  if (t > 4) throw DomainError("brute_force_solve supports at most 4 variables");
  if (!(grid_step > 0.0) || grid_step > 1e-2) throw DomainError("grid_step must lie in (0, 1e-2]");

  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  const double h = 1.0 / steps;
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(t);
  Eigen::VectorXd best = pi;
  double best_obj = std::numeric_limits<double>::infinity();

  // counts[i] lattice units on coordinate i; the last coordinate takes the rest.
  std::vector<int> counts(static_cast<std::size_t>(t), 0);
  std::function<void(int, int)> visit = [&](int coord, int remaining) {
    if (coord == t - 1) {
      counts[static_cast<std::size_t>(coord)] = remaining;
      for (int i = 0; i < t; ++i) pi[i] = counts[static_cast<std::size_t>(i)] * h;
      const double obj = problem.objective(pi);
      if (obj < best_obj) {
        best_obj = obj;
        best = pi;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(coord)] = c;
      visit(coord + 1, remaining - c);
    }
  };
  visit(0, steps);

  QPSolution sol;
  sol.pi = best;
  sol.objective = best_obj;
  sol.kkt_residual = kkt_residual(problem, best);
  sol.converged = true;
  return sol;
}

}  // namespace dpme
