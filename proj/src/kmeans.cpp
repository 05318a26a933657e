#include "dpme/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dpme/error.hpp"
#include "dpme/rng.hpp"
#include "dpme/simd/kernels.hpp"

namespace dpme {
namespace {

struct Assignment {
  std::vector<int> labels;
  std::vector<double> dist;  // squared distance to the assigned centroid
  double inertia = 0.0;
};

Assignment assign(const Dataset& data, const Eigen::MatrixXd& centroids) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const simd::PointBlock block{data.points().data(), m, d, 0, m};
  const std::vector<double> unit(d, 1.0);
  const auto& table = simd::kernels();

  Assignment out{std::vector<int>(m, 0), std::vector<double>(m, std::numeric_limits<double>::infinity()), 0.0};
  std::vector<double> buffer(m);
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const Eigen::VectorXd center = centroids.row(c).transpose();
    table.weighted_sq_dist(block, {center.data(), d}, unit, buffer);
    for (std::size_t k = 0; k < m; ++k) {
      if (buffer[k] < out.dist[k]) {
        out.dist[k] = buffer[k];
        out.labels[k] = static_cast<int>(c);
      }
    }
  }
  for (const double v : out.dist) out.inertia += v;
  return out;
}

Eigen::MatrixXd plus_plus_seeds(const Dataset& data, int k, Rng& rng) {
  const std::size_t m = data.size();
  Eigen::MatrixXd centroids(k, static_cast<Eigen::Index>(data.dim()));
  centroids.row(0) = data.points().row(static_cast<Eigen::Index>(rng.below(m)));
  for (int c = 1; c < k; ++c) {
    const Assignment current = assign(data, centroids.topRows(c));
    double total = current.inertia;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += current.dist[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(m));
    }
    centroids.row(c) = data.points().row(static_cast<Eigen::Index>(pick));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Dataset& data, int k, const KMeansOptions& options) {
  if (k < 1) throw DomainError("kmeans needs k >= 1");
  if (static_cast<std::size_t>(k) > data.size()) {
    throw DataError("kmeans with k = " + std::to_string(k) + " exceeds the " +
                    std::to_string(data.size()) + " data points");
  }
  if (options.restarts < 1 || options.max_iter < 1) throw DomainError("kmeans restarts and max_iter must be positive");

  const Rng root(options.seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const auto d = static_cast<Eigen::Index>(data.dim());

  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng = root.split(static_cast<std::uint64_t>(restart));
    Eigen::MatrixXd centroids = plus_plus_seeds(data, k, rng);
    Assignment current = assign(data, centroids);
    int it = 0;
    for (; it < options.max_iter; ++it) {
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (std::size_t i = 0; i < data.size(); ++i) {
        sums.row(current.labels[i]) += data.points().row(static_cast<Eigen::Index>(i));
        ++counts[static_cast<std::size_t>(current.labels[i])];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        } else {
          const auto far = std::max_element(current.dist.begin(), current.dist.end()) - current.dist.begin();
          centroids.row(c) = data.points().row(far);
          current.dist[static_cast<std::size_t>(far)] = 0.0;
        }
      }
      Assignment next = assign(data, centroids);
      const bool stable = next.labels == current.labels;
      current = std::move(next);
      if (stable) {
        ++it;
        break;
      }
    }
    if (current.inertia < best.inertia) {
      best.centroids = centroids;
      best.labels = current.labels;
      best.inertia = current.inertia;
      best.iterations = it;
    }
  }
  return best;
}

}  // namespace dpme
