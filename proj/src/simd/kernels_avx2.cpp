// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and is only entered after dispatch.cpp has checked the CPU flags.

#include <immintrin.h>

#include <array>
#include <cmath>

#include "dpme/simd/kernels.hpp"

namespace dpme::simd {
namespace {

// exp on four doubles: Cephes-style range reduction x = n ln2 + r with a
// (3,4) Pade approximant for e^r on |r| <= ln2/2. Lanes outside
// [-708.39, 709] or NaN take std::exp, so subnormal results and overflow
// match the scalar reference exactly.
inline __m256d exp4(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.3964185322641);
  const __m256d hi = _mm256_set1_pd(709.0);

  const __m256d in_range =
      _mm256_and_pd(_mm256_cmp_pd(x, lo, _CMP_GE_OQ), _mm256_cmp_pd(x, hi, _CMP_LE_OQ));
  const int in_mask = _mm256_movemask_pd(in_range);
  const __m256d xc = _mm256_blendv_pd(_mm256_setzero_pd(), x, in_range);

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634073599)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), xc);
  r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878E-4), rr,
                              _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042E-6), rr,
                              _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^n: the magic constant 2^52 + 2^51 parks n + 1023 in the low mantissa
  // bits; shifting by 52 moves it into the exponent field.
  const __m256d biased = _mm256_add_pd(fx, _mm256_set1_pd(1023.0 + 6755399441055744.0));
  const __m256d pow2n = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(biased), 52));
  __m256d result = _mm256_mul_pd(e, pow2n);

  if (in_mask != 0xF) {
    alignas(32) std::array<double, 4> xs;
    alignas(32) std::array<double, 4> rs;
    _mm256_store_pd(xs.data(), x);
    _mm256_store_pd(rs.data(), result);
    for (int lane = 0; lane < 4; ++lane) {
      if (!(in_mask & (1 << lane))) rs[lane] = std::exp(xs[lane]);
    }
    result = _mm256_load_pd(rs.data());
  }
  return result;
}

inline double horizontal_sum(__m256d v) {
  alignas(32) std::array<double, 4> lanes;
  _mm256_store_pd(lanes.data(), v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

// Weighted squared distance for rows [k, k+4).
inline __m256d sq_dist4(const PointBlock& block, std::size_t k, std::span<const double> center,
                        std::span<const double> scale) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t j = 0; j < block.dim; ++j) {
    const __m256d xs = _mm256_loadu_pd(block.cols + j * block.stride + k);
    const __m256d diff = _mm256_sub_pd(xs, _mm256_set1_pd(center[j]));
    acc = _mm256_fmadd_pd(_mm256_set1_pd(scale[j]), _mm256_mul_pd(diff, diff), acc);
  }
  return acc;
}

inline double sq_dist1(const PointBlock& block, std::size_t k, std::span<const double> center,
                       std::span<const double> scale) {
  double acc = 0.0;
  for (std::size_t j = 0; j < block.dim; ++j) {
    const double diff = block.cols[j * block.stride + k] - center[j];
    acc += scale[j] * (diff * diff);
  }
  return acc;
}

void weighted_sq_dist_avx2(const PointBlock& block, std::span<const double> center,
                           std::span<const double> scale, std::span<double> out) {
  std::size_t k = block.begin;
  for (; k + 4 <= block.end; k += 4) {
    _mm256_storeu_pd(out.data() + (k - block.begin), sq_dist4(block, k, center, scale));
  }
  for (; k < block.end; ++k) out[k - block.begin] = sq_dist1(block, k, center, scale);
}

double gauss_sum_avx2(const PointBlock& block, std::span<const double> center,
                      std::span<const double> scale) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d total4 = _mm256_setzero_pd();
  std::size_t k = block.begin;
  for (; k + 4 <= block.end; k += 4) {
    const __m256d neg = _mm256_xor_pd(sq_dist4(block, k, center, scale), sign);
    total4 = _mm256_add_pd(total4, exp4(neg));
  }
  double total = horizontal_sum(total4);
  for (; k < block.end; ++k) total += std::exp(-sq_dist1(block, k, center, scale));
  return total;
}

void exp_inplace_avx2(std::span<double> values) {
  std::size_t i = 0;
  for (; i + 4 <= values.size(); i += 4) {
    _mm256_storeu_pd(values.data() + i, exp4(_mm256_loadu_pd(values.data() + i)));
  }
  for (; i < values.size(); ++i) values[i] = std::exp(values[i]);
}

constexpr KernelTable kAvx2Table{Level::avx2, &weighted_sq_dist_avx2, &gauss_sum_avx2,
                                 &exp_inplace_avx2};

}  // namespace

const KernelTable& detail::avx2_table() noexcept { return kAvx2Table; }

}  // namespace dpme::simd
