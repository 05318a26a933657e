#include <cmath>

#include "dpme/simd/kernels.hpp"

namespace dpme::simd {
namespace {

void weighted_sq_dist_scalar(const PointBlock& block, std::span<const double> center,
                             std::span<const double> scale, std::span<double> out) {
  const std::size_t n = block.rows();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t j = 0; j < block.dim; ++j) {
    const double* col = block.cols + j * block.stride + block.begin;
    const double c = center[j];
    const double s = scale[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = col[i] - c;
      out[i] += s * (diff * diff);
    }
  }
}

double gauss_sum_scalar(const PointBlock& block, std::span<const double> center,
                        std::span<const double> scale) {
  double total = 0.0;
  for (std::size_t k = block.begin; k < block.end; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < block.dim; ++j) {
      const double diff = block.cols[j * block.stride + k] - center[j];
      acc += scale[j] * (diff * diff);
    }
    total += std::exp(-acc);
  }
  return total;
}

void exp_inplace_scalar(std::span<double> values) {
  for (double& v : values) v = std::exp(v);
}

constexpr KernelTable kScalarTable{Level::scalar, &weighted_sq_dist_scalar, &gauss_sum_scalar,
                                   &exp_inplace_scalar};

}  // namespace

const KernelTable& detail::scalar_table() noexcept { return kScalarTable; }

}  // namespace dpme::simd
