#include <atomic>

#include "dpme/error.hpp"
#include "dpme/simd/kernels.hpp"

namespace dpme::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(DPME_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level best_level() noexcept { return cpu_has_avx2() ? Level::avx2 : Level::scalar; }

std::atomic<Level>& active() {
  static std::atomic<Level> level{best_level()};
  return level;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return true;
    case Level::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels(Level level) {
  if (!supported(level)) {
    throw DomainError("SIMD level '" + std::string(level_name(level)) +
                      "' is not supported on this CPU");
  }
#if defined(DPME_HAVE_AVX2_KERNELS)
  if (level == Level::avx2) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

const KernelTable& kernels() { return kernels(active_level()); }

Level active_level() noexcept { return active().load(std::memory_order_relaxed); }

Level set_active_level(Level level) {
  if (!supported(level)) {
    throw DomainError("SIMD level '" + std::string(level_name(level)) +
                      "' is not supported on this CPU");
  }
  return active().exchange(level);
}

}  // namespace dpme::simd
