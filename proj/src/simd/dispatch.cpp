#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "sphereflow/errors.hpp"
#include "sphereflow/simd/kernels.hpp"

namespace sphereflow::simd {

namespace {
// -1: no override, otherwise the Level value.
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() {
#if defined(SPHEREFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
}  // namespace

const char* level_name(Level level) {
  switch (level) {
    case Level::scalar: return "scalar";
    case Level::avx2: return "avx2";
  }
  return "unknown";
}

Level detected_level() {
  static const Level level = cpu_has_avx2() ? Level::avx2 : Level::scalar;
  return level;
}

Level active_level() {
  const int f = g_forced.load();
  if (f >= 0) return static_cast<Level>(f);
  if (const char* env = std::getenv("SPHEREFLOW_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Level::scalar;
  }
  return detected_level();
}

void force_level(std::optional<Level> level) {
  if (level && *level == Level::avx2 && detected_level() != Level::avx2) {
    throw Unsupported("AVX2 kernels not available on this machine");
  }
  g_forced.store(level ? static_cast<int>(*level) : -1);
}

const KernelSet& kernels(Level level) {
  switch (level) {
    case Level::scalar: return detail::scalar_kernels;
    case Level::avx2:
#if defined(SPHEREFLOW_HAVE_AVX2)
      if (detected_level() == Level::avx2) return detail::avx2_kernels;
#endif
      throw Unsupported("AVX2 kernels not available on this machine");
  }
  return detail::scalar_kernels;
}

const KernelSet& active_kernels() { return kernels(active_level()); }

LegendreTables LegendreTables::build(int degree) {
  if (degree < 0) throw Unsupported("negative Legendre degree");
  LegendreTables t;
  t.degree = degree;
  const std::size_t sz = tri(degree + 1, 0);
  t.diag.assign(static_cast<std::size_t>(degree) + 2, 0.0);
  t.a.assign(sz, 0.0);
  t.b.assign(sz, 0.0);
  t.dratio.assign(sz, 0.0);
  t.diag[0] = 1.0;
  for (int m = 1; m <= degree + 1; ++m) {
    const double f = (m == 1) ? 3.0 : (2.0 * m + 1.0) / (2.0 * m);
    t.diag[m] = t.diag[m - 1] * std::sqrt(f);
  }
  for (int n = 1; n <= degree; ++n) {
    for (int m = 0; m < n; ++m) {
      const double nn = n, mm = m;
      t.a[tri(n, m)] = std::sqrt((2 * nn - 1) * (2 * nn + 1) / ((nn - mm) * (nn + mm)));
      if (n - 2 >= m) {
        t.b[tri(n, m)] = std::sqrt((2 * nn + 1) * (nn + mm - 1) * (nn - mm - 1) /
                                   ((nn - mm) * (nn + mm) * (2 * nn - 3)));
      }
      const double r2 = (m == 0) ? nn * (nn + 1) / 2.0 : (nn - mm) * (nn + mm + 1);
      t.dratio[tri(n, m)] = std::sqrt(r2);
    }
  }
  return t;
}

}  // namespace sphereflow::simd
