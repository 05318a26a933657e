#pragma once

// Data-parallel inner loops used by the embedding and clustering code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant selected at runtime from the CPU feature flags. The
// variants agree to a few ulps (tests/test_simd_equivalence.cpp); within
// one variant the summation order is fixed, so results are reproducible
// run to run.

#include <cstddef>
#include <span>
#include <string_view>

namespace dpme::simd {

enum class Level { scalar, avx2 };

std::string_view level_name(Level level) noexcept;

// A row range of a column-major point matrix (the Eigen default layout):
// coordinate j of row k lives at cols[j * stride + k].
struct PointBlock {
  const double* cols = nullptr;
  std::size_t stride = 0;
  std::size_t dim = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t rows() const noexcept { return end - begin; }
};

struct KernelTable {
  Level level;

  // out[k - begin] = sum_j scale[j] * (x_kj - center[j])^2
  void (*weighted_sq_dist)(const PointBlock& block, std::span<const double> center,
                           std::span<const double> scale, std::span<double> out);

  // sum_k exp(-sum_j scale[j] * (x_kj - center[j])^2)
  double (*gauss_sum)(const PointBlock& block, std::span<const double> center,
                      std::span<const double> scale);

  // values[i] = exp(values[i])
  void (*exp_inplace)(std::span<double> values);
};

bool supported(Level level) noexcept;

// Table for a specific level; throws DomainError if the CPU lacks it.
const KernelTable& kernels(Level level);

// Table currently used by the library (best supported level by default).
const KernelTable& kernels();

Level active_level() noexcept;

// Overrides the runtime selection; returns the previous level.
Level set_active_level(Level level);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(DPME_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace dpme::simd
