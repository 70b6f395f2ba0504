// Reference kernels. Everything here is plain double arithmetic with the
// operation order that the vector variants reproduce lane by lane.
#include <algorithm>
#include <cmath>
#include <vector>

#include "sphereflow/simd/kernels.hpp"

namespace sphereflow::simd {

namespace {

double gamma_table_scalar(double t, PowerSumNodes nodes, int L, double* gamma, double* dgamma) {
  const double s2 = std::fmax(0.0, 1.0 - t * t);
  const double s = std::sqrt(s2);
  std::vector<double> a(nodes.n, 1.0), b(nodes.n, 0.0);
  double imag_max = 0.0;
  if (L >= 1) dgamma[0] = 0.0;
  for (int m = 0; m < L; ++m) {
    double re = 0.0, im = 0.0, der = 0.0;
    for (std::size_t j = 0; j < nodes.n; ++j) {
      const double u = nodes.u[j], w = nodes.w[j];
      re += w * a[j];
      im += w * b[j];
      der += w * (a[j] - t * u * b[j]);
      const double an = a[j] * t + s2 * u * b[j];
      const double bn = b[j] * t - a[j] * u;
      a[j] = an;
      b[j] = bn;
    }
    gamma[m] = re;
    imag_max = std::fmax(imag_max, std::abs(s * im));
    if (m + 1 < L) dgamma[m + 1] = (m + 1) * der;
  }
  return imag_max;
}

void gamma_weighted_sums_scalar(double t, PowerSumNodes nodes, int L, const double* coef, double* g,
                                double* dg) {
  const double s2 = std::fmax(0.0, 1.0 - t * t);
  double gs = 0.0, ds = 0.0;
  for (std::size_t j = 0; j < nodes.n; ++j) {
    const double u = nodes.u[j], tu = t * u, s2u = s2 * u;
    double a = 1.0, b = 0.0, acc = 0.0, dacc = 0.0;
    for (int m = 0; m < L; ++m) {
      acc += coef[m] * a;
      if (m + 1 < L) dacc += coef[m + 1] * (m + 1) * (a - tu * b);
      const double an = a * t + s2u * b;
      b = b * t - a * u;
      a = an;
    }
    gs += nodes.w[j] * acc;
    ds += nodes.w[j] * dacc;
  }
  *g = gs;
  *dg = ds;
}

void synthesize_point(const LegendreTables& tab, const double* alpha, const double* beta,
                      const Vec3& p, Vec3& out, double* cur, double* nxt) {
  using T = LegendreTables;
  const int L = tab.degree;
  const double x = p[0], y = p[1], z = p[2];
  double gx = 0.0, gy = 0.0, gz = 0.0;

  // column m = 0
  cur[0] = tab.diag[0];
  if (L >= 1) cur[1] = tab.a[T::tri(1, 0)] * z * cur[0];
  for (int n = 2; n <= L; ++n) {
    cur[n] = tab.a[T::tri(n, 0)] * z * cur[n - 1] - tab.b[T::tri(n, 0)] * cur[n - 2];
  }

  double cm = 1.0, sm = 0.0, cp = 0.0, sp = 0.0;
  for (int m = 0; m <= L; ++m) {
    if (m + 1 <= L) {
      const int q = m + 1;
      nxt[q] = tab.diag[q];
      if (q + 1 <= L) nxt[q + 1] = tab.a[T::tri(q + 1, q)] * z * nxt[q];
      for (int n = q + 2; n <= L; ++n) {
        nxt[n] = tab.a[T::tri(n, q)] * z * nxt[n - 1] - tab.b[T::tri(n, q)] * nxt[n - 2];
      }
    }
    const double mm = m;
    for (int n = std::max(m, 1); n <= L; ++n) {
      const std::size_t k = T::tri(n, m);
      const double al = alpha[k], be = beta[k];
      const double q = cur[n];
      if (m > 0) {
        const double qm = q * mm;
        gx += qm * (al * cp + be * sp);
        gy += qm * (be * cp - al * sp);
      }
      if (n > m) {
        const double dq = tab.dratio[k] * nxt[n];
        gz += dq * (al * cm + be * sm);
      }
    }
    std::swap(cur, nxt);
    cp = cm;
    sp = sm;
    const double cn = cm * x - sm * y;
    sm = cm * y + sm * x;
    cm = cn;
  }
  out = {gy * z - gz * y, gz * x - gx * z, gx * y - gy * x};
}

void synthesize_field_scalar(const LegendreTables& tab, const double* alpha, const double* beta,
                             const Vec3* points, Vec3* out, std::size_t n) {
  std::vector<double> buf(2 * (static_cast<std::size_t>(tab.degree) + 2), 0.0);
  double* cur = buf.data();
  double* nxt = buf.data() + tab.degree + 2;
  for (std::size_t i = 0; i < n; ++i) synthesize_point(tab, alpha, beta, points[i], out[i], cur, nxt);
}

}  // namespace

namespace detail {
const KernelSet scalar_kernels{Level::scalar, &gamma_table_scalar, &gamma_weighted_sums_scalar,
                               &synthesize_field_scalar};
}  // namespace detail

}  // namespace sphereflow::simd
