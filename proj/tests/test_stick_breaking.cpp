#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dpme/error.hpp"
#include "dpme/rng.hpp"
#include "dpme/stick_breaking.hpp"

using namespace dpme;

namespace {

// Monte Carlo mean and standard error of the stick tail after T breaks.
std::pair<double, double> mc_tail(double alpha, int t, int n, std::uint64_t seed) {
  Rng rng(seed);
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double tail = weights_from_betas(sample_betas(alpha, t, rng)).tail_mass;
    s1 += tail;
    s2 += tail * tail;
  }
  const double mean = s1 / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / (n - 1))};
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("sample_betas") {
  SUBCASE("alpha = 1 gives variates in (0, 1)") {
    const auto b = sample_betas(1.0, 3, 0);
    REQUIRE(b.size() == 3);
    for (double x : b) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }
  SUBCASE("mean of Beta(1, 2) is 1/3") {
    const auto b = sample_betas(2.0, 100000, 17);
    double mean = 0;
    for (double x : b) mean += x;
    mean /= static_cast<double>(b.size());
    CHECK(std::abs(mean - 1.0 / 3.0) < 0.01);
  }
  SUBCASE("deterministic for a fixed seed") { CHECK(sample_betas(0.7, 50, 99) == sample_betas(0.7, 50, 99)); }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(sample_betas(0.0, 3, 0), DomainError);
    CHECK_THROWS_AS(sample_betas(-1.0, 3, 0), DomainError);
    CHECK_THROWS_AS(sample_betas(1.0, 0, 0), DomainError);
  }
}

TEST_CASE("weights_from_betas") {
  SUBCASE("first break takes the whole stick") {
    const auto w = weights_from_betas(std::vector<double>{1.0});
    CHECK(w.weights == std::vector<double>{1.0});
    CHECK(w.tail_mass == 0.0);
  }
  SUBCASE("halving") {
    const auto w = weights_from_betas(std::vector<double>{0.5, 0.5, 0.5});
    CHECK(w.weights == std::vector<double>{0.5, 0.25, 0.125});
    CHECK(w.tail_mass == 0.125);
  }
  SUBCASE("degenerate breaks") {
    const auto w = weights_from_betas(std::vector<double>{0.0, 0.0, 1.0});
    CHECK(w.weights == std::vector<double>{0.0, 0.0, 1.0});
    CHECK(w.tail_mass == 0.0);
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(weights_from_betas(std::vector<double>{0.2, 1.5}), DomainError);
    CHECK_THROWS_AS(weights_from_betas(std::vector<double>{-0.1}), DomainError);
    CHECK_THROWS_AS(weights_from_betas(std::vector<double>{std::nan("")}), DomainError);
  }
}

TEST_CASE("draw invariants hold on random draws") {
  const BaseMeasure base = BaseMeasure::isotropic(2, 0.0, 4.0, 1.0);
  Rng meta(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = 0.1 + 10.0 * meta.uniform();
    const int t = 1 + static_cast<int>(meta.below(80));
    const PriorDraw d = sample_draw(alpha, t, base, meta.next_u64());
    REQUIRE(d.components.size() == static_cast<std::size_t>(t));
    double total = 0.0;
    double remaining = 1.0;
    for (int i = 0; i < t; ++i) {
      const double w = d.sticks.weights[static_cast<std::size_t>(i)];
      const double b = d.sticks.betas[static_cast<std::size_t>(i)];
      REQUIRE(w >= 0.0);
      // independent product formula
      double prod = b;
      for (int k = 0; k < i; ++k) prod *= 1.0 - d.sticks.betas[static_cast<std::size_t>(k)];
      REQUIRE(std::abs(w - prod) <= 1e-15);
      total += w;
      remaining *= 1.0 - b;
    }
    REQUIRE(std::abs(total + d.sticks.tail_mass - 1.0) <= 1e-12);
    REQUIRE(std::abs(d.sticks.tail_mass - remaining) <= 1e-12);
    REQUIRE(d.components[0].cov_diag == base.comp_cov);
  }
}

TEST_CASE("sample_draw") {
  const BaseMeasure base = BaseMeasure::isotropic(1, 0.0, 1.0, 0.5);
  SUBCASE("T = 1") {
    const PriorDraw d = sample_draw(1.3, 1, base, 5);
    CHECK(d.sticks.weights[0] == doctest::Approx(1.0 - d.sticks.tail_mass).epsilon(1e-15));
    CHECK(d.sticks.tail_mass == doctest::Approx(1.0 - d.sticks.betas[0]).epsilon(1e-15));
  }
  SUBCASE("alpha = 1, T = 50 leaves no tail") {
    double mean_tail = 0.0;
    for (int n = 0; n < 10000; ++n) mean_tail += sample_draw(1.0, 50, base, mix_seed(8, n)).sticks.tail_mass;
    mean_tail /= 10000;
    CHECK(mean_tail < 1e-12);  // (1/2)^50 ~ 8.9e-16
  }
  SUBCASE("fixed seed reproduces weights and means exactly") {
    const PriorDraw a = sample_draw(2.0, 20, base, 77);
    const PriorDraw b = sample_draw(2.0, 20, base, 77);
    CHECK(a.sticks.weights == b.sticks.weights);
    for (std::size_t i = 0; i < a.components.size(); ++i) CHECK(a.components[i].mean == b.components[i].mean);
  }
  SUBCASE("atom means follow N(mean0, tau2)") {
    const BaseMeasure wide = BaseMeasure::isotropic(1, 2.0, 9.0, 1.0);
    const PriorDraw d = sample_draw(1.0, 20000, wide, 4);
    double s1 = 0, s2 = 0;
    for (const auto& c : d.components) {
      s1 += c.mean[0];
      s2 += c.mean[0] * c.mean[0];
    }
    const double mean = s1 / 20000;
    CHECK(std::abs(mean - 2.0) < 4.0 * 3.0 / std::sqrt(20000.0));
    CHECK(std::abs(s2 / 20000 - mean * mean - 9.0) < 0.4);
  }
  SUBCASE("base measure validation") {
    BaseMeasure bad = base;
    bad.tau2 = 0.0;
    CHECK_THROWS_AS(sample_draw(1.0, 3, bad, 0), DomainError);
    bad = base;
    bad.comp_cov = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(sample_draw(1.0, 3, bad, 0), DimensionError);
  }
}

TEST_CASE("expected_tail_mass against Monte Carlo") {
  CHECK(expected_tail_mass(3.0, 0) == 1.0);
  CHECK(expected_tail_mass(2.0, 5) == doctest::Approx(32.0 / 243.0).epsilon(1e-15));
  CHECK(expected_tail_mass(1.0, 10) == doctest::Approx(9.765625e-4).epsilon(1e-15));

  for (const auto& [alpha, t] : std::vector<std::pair<double, int>>{{2.0, 5}, {1.0, 10}, {0.5, 3}}) {
    const auto [mean, se] = mc_tail(alpha, t, 100000, 21);
    CHECK(std::abs(mean - expected_tail_mass(alpha, t)) < 4.0 * se);
  }
  CHECK_THROWS_AS(expected_tail_mass(0.0, 2), DomainError);
  CHECK_THROWS_AS(expected_tail_mass(1.0, -1), DomainError);
}

TEST_CASE("choose_truncation") {
  CHECK(choose_truncation(1.0, 1e-4, 1.0) == 10);
  CHECK(choose_truncation(1.0, 0.5, 0.25) == 1);
  CHECK(choose_truncation(5.0, 1e-2, 1.0) == 24);

  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const double alpha = 0.05 + 20.0 * rng.uniform();
    const double delta = std::pow(10.0, -12.0 * rng.uniform_open());
    const double c = 0.1 + 5.0 * rng.uniform();
    const int t = choose_truncation(alpha, delta, c);
    REQUIRE(t >= 1);
    REQUIRE(c * std::exp(-t / alpha) <= delta);
    if (t > 1) REQUIRE(c * std::exp(-(t - 1) / alpha) > delta);
  }
  CHECK_THROWS_AS(choose_truncation(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(choose_truncation(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(choose_truncation(1.0, 0.1, 0.0), DomainError);
}

TEST_CASE("dirichlet_marginal_check") {
  const BaseMeasure base = BaseMeasure::isotropic(1, 0.0, 1.0, 1.0);

  SUBCASE("one cell carries all mass") {
    const std::vector<Interval> whole{{-kInf, kInf}};
    const auto r = dirichlet_marginal_check(1.0, base, whole, 500, 40, 1);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.cells[0].var < 1e-20);
    CHECK(r.within(3.0));
  }
  SUBCASE("alpha = 1, halves of G_0") {
    const std::vector<Interval> halves{{-kInf, 0.0}, {0.0, kInf}};
    const auto r = dirichlet_marginal_check(1.0, base, halves, 10000, 40, 2);
    for (const auto& c : r.cells) {
      CHECK(c.base_mass == doctest::Approx(0.5));
      CHECK(c.expected_var == doctest::Approx(0.125));
      CHECK(std::abs(c.mean - 0.5) <= 3.0 * c.mean_se);
      CHECK(std::abs(c.var - 0.125) <= 3.0 * c.var_se);
    }
  }
  SUBCASE("variance shrinks as 1/(alpha + 1)") {
    const std::vector<Interval> halves{{-kInf, 0.0}, {0.0, kInf}};
    int t = 1;
    while (expected_tail_mass(100.0, t) >= 1e-8) ++t;
    const auto r = dirichlet_marginal_check(100.0, base, halves, 10000, t, 3);
    for (const auto& c : r.cells) {
      CHECK(c.expected_var == doctest::Approx(0.25 / 101.0));
      CHECK(std::abs(c.var - c.expected_var) <= 3.0 * c.var_se);
    }
  }
  SUBCASE("partition errors") {
    const std::vector<Interval> overlap{{-kInf, 0.5}, {0.0, kInf}};
    const std::vector<Interval> gap{{-kInf, 0.0}, {0.5, kInf}};
    const std::vector<Interval> bounded{{-1.0, 0.0}, {0.0, kInf}};
    CHECK_THROWS_AS(dirichlet_marginal_check(1.0, base, overlap, 10, 40, 0), PartitionError);
    CHECK_THROWS_AS(dirichlet_marginal_check(1.0, base, gap, 10, 40, 0), PartitionError);
    CHECK_THROWS_AS(dirichlet_marginal_check(1.0, base, bounded, 10, 40, 0), PartitionError);
  }
  SUBCASE("precondition errors") {
    const std::vector<Interval> whole{{-kInf, kInf}};
    CHECK_THROWS_AS(dirichlet_marginal_check(1.0, base, whole, 10, 5, 0), DomainError);
    CHECK_THROWS_AS(dirichlet_marginal_check(1.0, BaseMeasure::isotropic(2, 0, 1, 1), whole, 10, 40, 0),
                    DimensionError);
  }
}
