// AVX2 variants. Built with -mavx2 -mfma; only reached through the dispatcher
// after a CPU check. The synthesis kernel avoids FMA so that each lane repeats
// the scalar operation sequence exactly.
#if defined(SPHEREFLOW_HAVE_AVX2)

#include <immintrin.h>

#include <cstdlib>
#include <new>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sphereflow/simd/kernels.hpp"

namespace sphereflow::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax_abs(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  alignas(32) double t[4];
  _mm256_store_pd(t, _mm256_and_pd(v, mask));
  return std::fmax(std::fmax(t[0], t[1]), std::fmax(t[2], t[3]));
}

// Copies nodes into buffers padded to a multiple of 4 with zero weight.
struct PaddedNodes {
  std::vector<double> u, w;
  std::size_t n4 = 0;
  explicit PaddedNodes(PowerSumNodes nodes) {
    n4 = (nodes.n + 3) / 4 * 4;
    u.assign(n4, 0.0);
    w.assign(n4, 0.0);
    std::copy(nodes.u, nodes.u + nodes.n, u.begin());
    std::copy(nodes.w, nodes.w + nodes.n, w.begin());
  }
};

double gamma_table_avx2(double t, PowerSumNodes nodes, int L, double* gamma, double* dgamma) {
  const double s2 = std::fmax(0.0, 1.0 - t * t);
  const double s = std::sqrt(s2);
  PaddedNodes pn(nodes);
  const std::size_t n4 = pn.n4;
  std::vector<double> a(n4, 1.0), b(n4, 0.0);
  const __m256d vt = _mm256_set1_pd(t), vs2 = _mm256_set1_pd(s2);
  double imag_max = 0.0;
  if (L >= 1) dgamma[0] = 0.0;
  for (int m = 0; m < L; ++m) {
    __m256d re = _mm256_setzero_pd(), im = _mm256_setzero_pd(), der = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4) {
      const __m256d u = _mm256_loadu_pd(&pn.u[j]);
      const __m256d w = _mm256_loadu_pd(&pn.w[j]);
      const __m256d av = _mm256_loadu_pd(&a[j]);
      const __m256d bv = _mm256_loadu_pd(&b[j]);
      re = _mm256_fmadd_pd(w, av, re);
      im = _mm256_fmadd_pd(w, bv, im);
      const __m256d tub = _mm256_mul_pd(_mm256_mul_pd(vt, u), bv);
      der = _mm256_fmadd_pd(w, _mm256_sub_pd(av, tub), der);
      const __m256d an = _mm256_fmadd_pd(av, vt, _mm256_mul_pd(_mm256_mul_pd(vs2, u), bv));
      const __m256d bn = _mm256_fmsub_pd(bv, vt, _mm256_mul_pd(av, u));
      _mm256_storeu_pd(&a[j], an);
      _mm256_storeu_pd(&b[j], bn);
    }
    gamma[m] = hsum(re);
    imag_max = std::fmax(imag_max, std::abs(s * hsum(im)));
    if (m + 1 < L) dgamma[m + 1] = (m + 1) * hsum(der);
  }
  return imag_max;
}

void gamma_weighted_sums_avx2(double t, PowerSumNodes nodes, int L, const double* coef, double* g,
                              double* dg) {
  const double s2 = std::fmax(0.0, 1.0 - t * t);
  PaddedNodes pn(nodes);
  const __m256d vt = _mm256_set1_pd(t), vs2 = _mm256_set1_pd(s2);
  __m256d gs = _mm256_setzero_pd(), ds = _mm256_setzero_pd();
  for (std::size_t j = 0; j < pn.n4; j += 4) {
    const __m256d u = _mm256_loadu_pd(&pn.u[j]);
    const __m256d tu = _mm256_mul_pd(vt, u), s2u = _mm256_mul_pd(vs2, u);
    __m256d a = _mm256_set1_pd(1.0), b = _mm256_setzero_pd();
    __m256d acc = _mm256_setzero_pd(), dacc = _mm256_setzero_pd();
    for (int m = 0; m < L; ++m) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(coef[m]), a, acc);
      if (m + 1 < L) {
        const __m256d c = _mm256_set1_pd(coef[m + 1] * (m + 1));
        dacc = _mm256_fmadd_pd(c, _mm256_fnmadd_pd(tu, b, a), dacc);
      }
      const __m256d an = _mm256_fmadd_pd(a, vt, _mm256_mul_pd(s2u, b));
      b = _mm256_fmsub_pd(b, vt, _mm256_mul_pd(a, u));
      a = an;
    }
    const __m256d w = _mm256_loadu_pd(&pn.w[j]);
    gs = _mm256_fmadd_pd(w, acc, gs);
    ds = _mm256_fmadd_pd(w, dacc, ds);
  }
  *g = hsum(gs);
  *dg = hsum(ds);
}

void synthesize_block(const LegendreTables& tab, const double* alpha, const double* beta,
                      __m256d x, __m256d y, __m256d z, __m256d* out, __m256d* cur, __m256d* nxt) {
  using T = LegendreTables;
  const int L = tab.degree;
  __m256d gx = _mm256_setzero_pd(), gy = _mm256_setzero_pd(), gz = _mm256_setzero_pd();
  auto bc = [](double v) { return _mm256_set1_pd(v); };

  cur[0] = bc(tab.diag[0]);
  if (L >= 1) cur[1] = _mm256_mul_pd(_mm256_mul_pd(bc(tab.a[T::tri(1, 0)]), z), cur[0]);
  for (int n = 2; n <= L; ++n) {
    cur[n] = _mm256_sub_pd(_mm256_mul_pd(_mm256_mul_pd(bc(tab.a[T::tri(n, 0)]), z), cur[n - 1]),
                           _mm256_mul_pd(bc(tab.b[T::tri(n, 0)]), cur[n - 2]));
  }

  __m256d cm = bc(1.0), sm = _mm256_setzero_pd(), cp = _mm256_setzero_pd(), sp = _mm256_setzero_pd();
  for (int m = 0; m <= L; ++m) {
    if (m + 1 <= L) {
      const int q = m + 1;
      nxt[q] = bc(tab.diag[q]);
      if (q + 1 <= L) nxt[q + 1] = _mm256_mul_pd(_mm256_mul_pd(bc(tab.a[T::tri(q + 1, q)]), z), nxt[q]);
      for (int n = q + 2; n <= L; ++n) {
        nxt[n] = _mm256_sub_pd(_mm256_mul_pd(_mm256_mul_pd(bc(tab.a[T::tri(n, q)]), z), nxt[n - 1]),
                               _mm256_mul_pd(bc(tab.b[T::tri(n, q)]), nxt[n - 2]));
      }
    }
    const __m256d mm = bc(static_cast<double>(m));
    for (int n = std::max(m, 1); n <= L; ++n) {
      const std::size_t k = T::tri(n, m);
      const __m256d al = bc(alpha[k]), be = bc(beta[k]);
      const __m256d q = cur[n];
      if (m > 0) {
        const __m256d qm = _mm256_mul_pd(q, mm);
        gx = _mm256_add_pd(gx, _mm256_mul_pd(qm, _mm256_add_pd(_mm256_mul_pd(al, cp), _mm256_mul_pd(be, sp))));
        gy = _mm256_add_pd(gy, _mm256_mul_pd(qm, _mm256_sub_pd(_mm256_mul_pd(be, cp), _mm256_mul_pd(al, sp))));
      }
      if (n > m) {
        const __m256d dq = _mm256_mul_pd(bc(tab.dratio[k]), nxt[n]);
        gz = _mm256_add_pd(gz, _mm256_mul_pd(dq, _mm256_add_pd(_mm256_mul_pd(al, cm), _mm256_mul_pd(be, sm))));
      }
    }
    std::swap(cur, nxt);
    cp = cm;
    sp = sm;
    const __m256d cn = _mm256_sub_pd(_mm256_mul_pd(cm, x), _mm256_mul_pd(sm, y));
    sm = _mm256_add_pd(_mm256_mul_pd(cm, y), _mm256_mul_pd(sm, x));
    cm = cn;
  }
  out[0] = _mm256_sub_pd(_mm256_mul_pd(gy, z), _mm256_mul_pd(gz, y));
  out[1] = _mm256_sub_pd(_mm256_mul_pd(gz, x), _mm256_mul_pd(gx, z));
  out[2] = _mm256_sub_pd(_mm256_mul_pd(gx, y), _mm256_mul_pd(gy, x));
}

void synthesize_field_avx2(const LegendreTables& tab, const double* alpha, const double* beta,
                           const Vec3* points, Vec3* out, std::size_t n) {
  const std::size_t len = static_cast<std::size_t>(tab.degree) + 2;
  struct Buffer {
    __m256d* p;
    explicit Buffer(std::size_t n) : p(static_cast<__m256d*>(std::aligned_alloc(32, n * sizeof(__m256d)))) {
      if (!p) throw std::bad_alloc();
    }
    ~Buffer() { std::free(p); }
  } buf(2 * len);
  alignas(32) double px[4], py[4], pz[4], o[3][4];
  for (std::size_t i = 0; i < n; i += 4) {
    const std::size_t cnt = std::min<std::size_t>(4, n - i);
    for (std::size_t l = 0; l < 4; ++l) {
      const Vec3& p = points[i + std::min(l, cnt - 1)];
      px[l] = p[0];
      py[l] = p[1];
      pz[l] = p[2];
    }
    __m256d res[3];
    synthesize_block(tab, alpha, beta, _mm256_load_pd(px), _mm256_load_pd(py), _mm256_load_pd(pz), res,
                     buf.p, buf.p + len);
    for (int c = 0; c < 3; ++c) _mm256_store_pd(o[c], res[c]);
    for (std::size_t l = 0; l < cnt; ++l) out[i + l] = {o[0][l], o[1][l], o[2][l]};
  }
}

}  // namespace

namespace detail {
const KernelSet avx2_kernels{Level::avx2, &gamma_table_avx2, &gamma_weighted_sums_avx2,
                             &synthesize_field_avx2};
}  // namespace detail

}  // namespace sphereflow::simd

#endif
