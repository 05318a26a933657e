#include "dpme/types.hpp"

#include <cmath>
#include <string>

#include "dpme/error.hpp"

namespace dpme {

void GaussianComponent::validate() const {
  if (mean.size() != cov_diag.size()) {
    throw DimensionError("component mean has " + std::to_string(mean.size()) +
                         " entries but cov_diag has " + std::to_string(cov_diag.size()));
  }
  if (mean.size() == 0) throw DimensionError("component has zero dimension");
  for (Eigen::Index j = 0; j < cov_diag.size(); ++j) {
    if (!(cov_diag[j] > 0.0) || !std::isfinite(cov_diag[j])) {
      throw DomainError("component variance must be positive and finite");
    }
    if (!std::isfinite(mean[j])) throw DomainError("component mean must be finite");
  }
}

Dataset::Dataset(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) throw DataError("dataset is empty");
  if (!points_.allFinite()) throw DataError("dataset contains non-finite values");
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw DataError("dataset is empty");
  const std::size_t d = rows.front().size();
  Eigen::MatrixXd points(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != d) {
      throw DataError("row " + std::to_string(k + 1) + " has " + std::to_string(rows[k].size()) +
                      " values, expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      points(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j];
    }
  }
  return Dataset(std::move(points));
}

Eigen::VectorXd Dataset::mean() const { return points_.colwise().mean().transpose(); }

Eigen::VectorXd Dataset::variance() const {
  const Eigen::RowVectorXd mu = points_.colwise().mean();
  return ((points_.rowwise() - mu).array().square().colwise().sum() /
          static_cast<double>(points_.rows()))
      .transpose();
}

}  // namespace dpme
