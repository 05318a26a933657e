#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dpme {

/// One mixture component f_theta: a Gaussian with diagonal covariance.
struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::VectorXd cov_diag;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }

  /// Throws DomainError unless cov_diag is strictly positive and finite,
  /// DimensionError if mean and cov_diag lengths differ.
  void validate() const;
};

/// m observations in d dimensions, stored column-major (m x d) so each
/// coordinate is contiguous for the SIMD kernels.
class Dataset {
 public:
  Dataset() = default;

  /// Throws DataError if empty or any entry is non-finite.
  explicit Dataset(Eigen::MatrixXd points);

  static Dataset from_rows(const std::vector<std::vector<double>>& rows);

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }

  Eigen::VectorXd row(std::size_t k) const { return points_.row(static_cast<Eigen::Index>(k)).transpose(); }

  Eigen::VectorXd mean() const;
  /// Per-dimension population variance (divides by m).
  Eigen::VectorXd variance() const;

 private:
  Eigen::MatrixXd points_;
};

}  // namespace dpme
