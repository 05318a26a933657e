#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dpme/error.hpp"
#include "dpme/rng.hpp"
#include "dpme/simplex_qp.hpp"

using namespace dpme;

namespace {

Eigen::MatrixXd random_psd(Rng& rng, int n, int rank) {
  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = rng.normal();
  return a * a.transpose();
}

Eigen::VectorXd random_vec(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Exact minimizer by enumerating supports: on each support solve the
// equality-constrained KKT system and keep the best feasible point.
Eigen::VectorXd support_enumeration(const QPProblem& p) {
  const int n = p.size();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_pi;
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) kkt(a, b) = p.Q(idx[a], idx[b]);
      kkt(a, k) = 1.0;
      kkt(k, a) = 1.0;
      rhs[a] = p.r[idx[a]];
    }
    rhs[k] = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-9) continue;
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    bool ok = true;
    for (int a = 0; a < k; ++a) {
      if (sol[a] < -1e-12) ok = false;
      pi[idx[a]] = std::max(0.0, sol[a]);
    }
    if (!ok) continue;
    pi /= pi.sum();
    const double f = p.objective(pi);
    if (f < best) {
      best = f;
      best_pi = pi;
    }
  }
  return best_pi;
}

QPProblem make(const Eigen::MatrixXd& q, const Eigen::VectorXd& r, double eps = 0.0) {
  QPProblem p;
  p.Q = q;
  p.r = r;
  p.epsilon = eps;
  return p;
}

}  // namespace

TEST_CASE("project_simplex") {
  SUBCASE("examples") {
    CHECK(project_simplex(Eigen::Vector2d(0.5, 0.5)).isApprox(Eigen::Vector2d(0.5, 0.5), 1e-15));
    CHECK((project_simplex(Eigen::Vector2d(2.0, 0.0)) - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-15);
    CHECK((project_simplex(Eigen::Vector3d(0.0, 0.0, 0.0)) - Eigen::Vector3d::Constant(1.0 / 3.0)).norm() < 1e-15);
    CHECK((project_simplex(Eigen::Vector3d(-1.0, 3.0, 0.0)) - Eigen::Vector3d(0.0, 1.0, 0.0)).norm() < 1e-15);
  }
  SUBCASE("[2, 0] against a dense search along the simplex edge") {
    const Eigen::Vector2d v(2.0, 0.0);
    double best = std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int i = 0; i <= 100000; ++i) {
      const double t = i / 100000.0;
      const double d = (Eigen::Vector2d(t, 1.0 - t) - v).squaredNorm();
      if (d < best) best = d, arg = t;
    }
    CHECK(project_simplex(v)[0] == doctest::Approx(arg).epsilon(1e-5));
  }
  SUBCASE("properties on random vectors") {
    Rng rng(1);
    for (int rep = 0; rep < 500; ++rep) {
      const int n = 1 + static_cast<int>(rng.below(12));
      const Eigen::VectorXd v = 3.0 * random_vec(rng, n);
      const Eigen::VectorXd w = 3.0 * random_vec(rng, n);
      const Eigen::VectorXd p = project_simplex(v);
      REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
      REQUIRE(p.minCoeff() >= 0.0);
      REQUIRE((project_simplex(p) - p).norm() <= 1e-14);
      REQUIRE((p - project_simplex(w)).norm() <= (v - w).norm() + 1e-12);
      // variational inequality: (v - p).(q - p) <= 0 for all simplex q, so on vertices
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
        REQUIRE((v - p).dot(e - p) <= 1e-12);
      }
    }
  }
  SUBCASE("lattice oracle for three coordinates") {
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::Vector3d v = random_vec(rng, 3);
      const Eigen::VectorXd p = project_simplex(v);
      double best = std::numeric_limits<double>::infinity();
      const int n = 400;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
          const Eigen::Vector3d q(double(i) / n, double(j) / n, double(n - i - j) / n);
          best = std::min(best, (q - v).squaredNorm());
        }
      CHECK((p - v).squaredNorm() <= best + 1e-12);
      CHECK((p - v).squaredNorm() >= best - 2e-2 / n);
    }
  }
  CHECK_THROWS_AS(project_simplex(Eigen::VectorXd()), DomainError);
  CHECK_THROWS_AS(project_simplex(Eigen::Vector2d(std::nan(""), 0.0)), DomainError);
}

TEST_CASE("kkt_residual") {
  const QPProblem p = make(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 0.0));
  CHECK(kkt_residual(p, Eigen::Vector2d(1.0, 0.0)) == 0.0);
  CHECK(kkt_residual(p, Eigen::Vector2d(0.5, 0.5)) > 0.1);
  CHECK_THROWS_AS(kkt_residual(p, Eigen::Vector2d(0.7, 0.7)), DomainError);
  CHECK_THROWS_AS(kkt_residual(p, Eigen::Vector3d(1.0, 0.0, 0.0)), DimensionError);
}

TEST_CASE("solve on analytic instances") {
  SUBCASE("T = 1") {
    const auto s = solve(make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 5.0)));
    CHECK(s.pi[0] == 1.0);
    CHECK(s.converged);
  }
  SUBCASE("identity with r = 0 gives the uniform point") {
    const auto s = solve(make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero()));
    CHECK((s.pi - Eigen::Vector2d(0.5, 0.5)).norm() <= 1e-12);
  }
  SUBCASE("identity with r = e1 gives a vertex") {
    const auto s = solve(make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 0.0)));
    CHECK((s.pi - Eigen::Vector2d(1.0, 0.0)).norm() <= 1e-9);
    CHECK(s.kkt_residual <= 1e-8);
  }
  SUBCASE("interior optimum") {
    // 1/2 pi'diag(1,2)pi: pi proportional to (2, 1)
    Eigen::Matrix2d q;
    q << 1.0, 0.0, 0.0, 2.0;
    const auto s = solve(make(q, Eigen::Vector2d::Zero()));
    CHECK((s.pi - Eigen::Vector2d(2.0 / 3.0, 1.0 / 3.0)).norm() <= 1e-7);
    CHECK(s.kkt_residual <= 1e-8);
  }
  SUBCASE("Q = 0 keeps the uniform warm start when r is flat") {
    const auto s = solve(make(Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4)));
    CHECK((s.pi - Eigen::VectorXd::Constant(4, 0.25)).norm() <= 1e-15);
    CHECK(s.converged);
  }
  SUBCASE("Q = 0 with a linear term picks the best vertex") {
    const auto s = solve(make(Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d(0.1, 0.5, 0.2)));
    CHECK((s.pi - Eigen::Vector3d(0.0, 1.0, 0.0)).norm() <= 1e-9);
  }
  SUBCASE("heavy ridge pulls the solution toward uniform") {
    Rng rng(3);
    const Eigen::MatrixXd s_mat = random_psd(rng, 5, 5);
    const Eigen::VectorXd r = 0.1 * random_vec(rng, 5);
    const QPProblem p = make(s_mat + 1e6 * Eigen::MatrixXd::Identity(5, 5), r, 1e6);
    CHECK((solve(p).pi - Eigen::VectorXd::Constant(5, 0.2)).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("solve against exact support enumeration") {
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const int rank = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const Eigen::MatrixXd s_mat = random_psd(rng, n, rank);
    const double eps = default_epsilon(s_mat);
    QPProblem p = QPProblem::from_gram(EmbeddingGram{s_mat, random_vec(rng, n), 1.0}, eps);
    const auto sol = solve(p);
    const Eigen::VectorXd ref = support_enumeration(p);
    REQUIRE(ref.size() == n);
    CHECK(sol.converged);
    CHECK(std::abs(sol.pi.sum() - 1.0) <= 1e-12);
    CHECK(sol.pi.minCoeff() >= 0.0);
    CHECK(sol.kkt_residual <= 1e-8);
    CHECK(sol.objective <= p.objective(ref) + 1e-9 * (1.0 + std::abs(p.objective(ref))));
    CHECK(sol.objective == doctest::Approx(p.objective(sol.pi)).epsilon(1e-12));
    // objective history never goes up
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i)
      REQUIRE(sol.objective_history[i] <= sol.objective_history[i - 1] + 1e-14 * (1 + std::abs(sol.objective_history[i - 1])));
  }
}

TEST_CASE("brute_force_solve") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const QPProblem p = make(random_psd(rng, 3, 3), random_vec(rng, 3));
    const auto grid = brute_force_solve(p, 1e-3);
    const auto fast = solve(p);
    CHECK(std::abs(grid.pi.sum() - 1.0) <= 1e-12);
    CHECK(fast.objective <= grid.objective + 1e-12);
    CHECK(grid.objective - fast.objective <= 1e-4);
  }
  const QPProblem p5 = make(Eigen::MatrixXd::Identity(5, 5), Eigen::VectorXd::Zero(5));
  CHECK_THROWS_AS(brute_force_solve(p5, 1e-2), DomainError);
  const QPProblem p2 = make(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(brute_force_solve(p2, 0.1), DomainError);
  CHECK_THROWS_AS(brute_force_solve(p2, 0.0), DomainError);
}

TEST_CASE("solver input validation") {
  CHECK_THROWS_AS(solve(make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector3d::Zero())), DimensionError);
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(solve(make(asym, Eigen::Vector2d::Zero())), DomainError);
  Eigen::Matrix2d bad = Eigen::Matrix2d::Identity();
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(solve(make(bad, Eigen::Vector2d::Zero())), DomainError);
  CHECK_THROWS_AS(QPProblem::from_gram(EmbeddingGram{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero(), 0.0}, -1.0),
                  DomainError);
  SolverOptions opts;
  opts.max_iter = 0;
  CHECK_THROWS_AS(solve(make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero()), opts), DomainError);
}

TEST_CASE("iteration cap reports non-convergence") {
  Rng rng(6);
  const int n = 30;
  Eigen::MatrixXd q = random_psd(rng, n, 3);
  q += 1e-8 * Eigen::MatrixXd::Identity(n, n);
  SolverOptions opts;
  opts.max_iter = 1;
  const auto s = solve(make(q, random_vec(rng, n)), opts);
  CHECK(s.iterations <= 1);
  CHECK(std::abs(s.pi.sum() - 1.0) <= 1e-12);
  if (!s.converged) CHECK(s.kkt_residual > opts.tol);
}

TEST_CASE("power iteration and default epsilon") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd q = random_psd(rng, 8, 8);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
    const double top = eig.eigenvalues().maxCoeff();
    const double est = power_iteration_max_eigenvalue(q, 0);
    CHECK(est <= top * (1 + 1e-12));
    CHECK(est >= 0.5 * top);
  }
  const Eigen::Matrix3d s = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  CHECK(default_epsilon(s) == doctest::Approx(2e-6).epsilon(1e-15));
}
