#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dpme/types.hpp"

namespace dpme {

struct KMeansOptions {
  int restarts = 20;
  int max_iter = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;  // of the winning restart
};

/// Lloyd's algorithm with k-means++ seeding; restart r uses stream r of the
/// seed and the lowest-inertia restart wins (earliest on ties). An empty
/// cluster is re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const Dataset& data, int k, const KMeansOptions& options = {});

}  // namespace dpme
