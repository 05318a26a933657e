// Every SIMD variant must agree with the scalar reference kernels.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dpme/inference.hpp"
#include "dpme/rkhs_embedding.hpp"
#include "dpme/rng.hpp"
#include "dpme/simd/kernels.hpp"

using namespace dpme;
using simd::Level;

namespace {

double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

struct Restore {
  Level saved = simd::active_level();
  ~Restore() { simd::set_active_level(saved); }
};

}  // namespace

TEST_CASE("scalar level is always available") {
  CHECK(simd::supported(Level::scalar));
  CHECK(simd::kernels(Level::scalar).level == Level::scalar);
  CHECK(simd::level_name(simd::active_level()) != "unknown");
}

TEST_CASE("avx2 kernels match the scalar reference") {
  if (!simd::supported(Level::avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence not exercised");
    CHECK_THROWS(simd::kernels(Level::avx2));
    return;
  }
  const auto& ref = simd::kernels(Level::scalar);
  const auto& vec = simd::kernels(Level::avx2);
  Rng rng(11);

  SUBCASE("exp over the full range and special values") {
    std::vector<double> xs{0.0, -0.0, 1e-300, -1e-300, 1.0, -1.0, 0.5, -0.5, 700.0, 709.0, 709.5, 709.78,
                           -700.0, -708.39, -708.4, -720.0, -745.0, -746.0, -1e6,
                           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i < 20000; ++i) xs.push_back(-745.0 + 1454.0 * rng.uniform());
    for (int i = 0; i < 20000; ++i) xs.push_back(-5.0 * rng.uniform());
    std::vector<double> a = xs, b = xs;
    ref.exp_inplace(a);
    vec.exp_inplace(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (a[i] < std::numeric_limits<double>::min()) {
        CHECK(b[i] == a[i]);  // subnormal and zero lanes take std::exp
      } else {
        worst = std::max(worst, rel_diff(a[i], b[i]));
      }
    }
    CHECK(worst < 4e-16);

    std::vector<double> nan{std::nan(""), 0.0, 0.0, 0.0};
    vec.exp_inplace(nan);
    CHECK(std::isnan(nan[0]));
    CHECK(nan[1] == 1.0);
  }

  SUBCASE("weighted squared distances and Gaussian sums on ragged blocks") {
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t m = 1 + rng.below(41);
      const std::size_t d = 1 + rng.below(7);
      std::vector<double> cols(m * d);
      for (double& v : cols) v = 3.0 * rng.normal();
      std::vector<double> center(d), scale(d);
      for (std::size_t j = 0; j < d; ++j) {
        center[j] = rng.normal();
        scale[j] = 0.05 + rng.uniform();
      }
      const std::size_t begin = rng.below(m);
      const std::size_t end = begin + rng.below(m - begin + 1);
      const simd::PointBlock block{cols.data(), m, d, begin, end};

      std::vector<double> a(block.rows()), b(block.rows());
      ref.weighted_sq_dist(block, center, scale, a);
      vec.weighted_sq_dist(block, center, scale, b);
      for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(rel_diff(a[i], b[i]) < 1e-14);

      const double sa = ref.gauss_sum(block, center, scale);
      const double sb = vec.gauss_sum(block, center, scale);
      REQUIRE(rel_diff(sa, sb) < 1e-13);
    }
  }

  SUBCASE("empty block") {
    std::vector<double> cols{1.0, 2.0};
    const double c = 0.0, s = 1.0;
    const simd::PointBlock block{cols.data(), 2, 1, 1, 1};
    CHECK(vec.gauss_sum(block, {&c, 1}, {&s, 1}) == 0.0);
  }
}

TEST_CASE("library results agree across dispatch levels") {
  if (!simd::supported(Level::avx2)) return;
  Restore restore;
  Rng rng(5);
  Eigen::MatrixXd pts(301, 2);
  for (Eigen::Index k = 0; k < pts.size(); ++k) pts.data()[k] = 2.0 * rng.normal();
  const Dataset data(pts);

  FitConfig cfg;
  cfg.trunc = 6;
  cfg.seed = 9;

  simd::set_active_level(Level::scalar);
  const FitResult scalar_fit = fit(data, cfg);
  const double scalar_bw = median_heuristic_bandwidth(data);
  simd::set_active_level(Level::avx2);
  const FitResult avx_fit = fit(data, cfg);
  const double avx_bw = median_heuristic_bandwidth(data);

  CHECK(scalar_bw == doctest::Approx(avx_bw).epsilon(1e-14));
  CHECK(std::abs(scalar_fit.gram.data_term - avx_fit.gram.data_term) < 1e-13);
  CHECK((scalar_fit.gram.R - avx_fit.gram.R).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((scalar_fit.model.weights - avx_fit.model.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(scalar_fit.mmd2 - avx_fit.mmd2) < 1e-10);
  CHECK(scalar_fit.latents.assignments == avx_fit.latents.assignments);
}
