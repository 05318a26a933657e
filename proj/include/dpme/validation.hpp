#pragma once

// Statistical and analytic validation suites. Each suite is deterministic
// given its seed and reports one CheckResult per tested property.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpme/types.hpp"

namespace dpme::validation {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string name;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Monte Carlo mean of the stick tail vs (alpha/(1+alpha))^T, 4 standard
/// errors, over alpha in {0.5, 1, 2, 5} and T in {1, 5, 10, 25}.
SuiteReport tail_mass_suite(std::uint64_t seed, int n_draws = 100000);

/// Mean squared embedding gap vs exp(-T/alpha) and its log-linear decay
/// slope, alpha in {0.5, 1, 2}, T = 1..15, 2000 draws.
SuiteReport bound_suite(std::uint64_t seed);

/// Closed-form component inner products against 10^6-sample Monte Carlo
/// on 24 random instances (d in {1, 2, 5}), plus the sqrt(1/3) reference.
SuiteReport gram_suite(std::uint64_t seed);

/// Cell means and variances of G(A_i) against the Dirichlet marginals,
/// three cells, alpha in {1, 10}, 10^4 draws.
SuiteReport dirichlet_suite(std::uint64_t seed);

/// Solver vs brute-force lattice search on 50 random T = 3 instances plus
/// the analytic instances.
SuiteReport qp_suite(std::uint64_t seed);

/// Weight recovery on 0.7 N(-3,1) + 0.3 N(3,1) with atoms at the truth
/// over 10 seeds, and the effective component count with 20 kmeans atoms.
SuiteReport recovery_suite(std::uint64_t seed);

/// m points from 0.7 N(-3, 1) + 0.3 N(3, 1).
Dataset two_cluster_data(int m, std::uint64_t seed);

/// Names accepted by run_suite: bound, gram, dirichlet, qp.
const std::vector<std::string>& cli_suite_names();
SuiteReport run_suite(std::string_view name, std::uint64_t seed);

}  // namespace dpme::validation
