#include "sphereflow/basis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "sphereflow/errors.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/quadrature.hpp"

namespace sphereflow {

namespace {

using T = simd::LegendreTables;

// Qbar_n^m(z) for all 0 <= m <= n <= tab.degree, triangular layout.
void legendre_all(const T& tab, double z, std::vector<double>& q) {
  const int L = tab.degree;
  q.assign(tab.size(), 0.0);
  for (int m = 0; m <= L; ++m) {
    q[T::tri(m, m)] = tab.diag[m];
    if (m + 1 <= L) q[T::tri(m + 1, m)] = tab.a[T::tri(m + 1, m)] * z * q[T::tri(m, m)];
    for (int n = m + 2; n <= L; ++n) {
      q[T::tri(n, m)] = tab.a[T::tri(n, m)] * z * q[T::tri(n - 1, m)] - tab.b[T::tri(n, m)] * q[T::tri(n - 2, m)];
    }
  }
}

// grad(Qbar_n^m(z) * [C_m or S_m](x, y)) x x, from precomputed Legendre values.
Vec3 curl_mode(const T& tab, const std::vector<double>& q, int n, int m, bool sine, const Vec3& p) {
  double cm = 1.0, sm = 0.0, cp = 0.0, sp = 0.0;
  for (int j = 0; j < m; ++j) {
    cp = cm;
    sp = sm;
    const double cn = cm * p[0] - sm * p[1];
    sm = cm * p[1] + sm * p[0];
    cm = cn;
  }
  const double Q = q[T::tri(n, m)];
  const double dQ = (n > m) ? tab.dratio[T::tri(n, m)] * q[T::tri(n, m + 1)] : 0.0;
  Vec3 g;
  if (!sine) {
    g = {Q * m * cp, -Q * m * sp, dQ * cm};
  } else {
    g = {Q * m * sp, Q * m * cp, dQ * sm};
  }
  return cross(g, p);
}

void mode_of_k(int k, int& m, bool& sine) {
  if (k == 1) {
    m = 0;
    sine = false;
  } else {
    m = k / 2;
    sine = (k % 2 == 1);
  }
}

}  // namespace

BasisRegistry::BasisRegistry(int L_max, int quadrature_order)
    : L_max_(L_max), quad_order_(quadrature_order > 0 ? quadrature_order : 4 * L_max) {
  if (L_max < 1) throw Unsupported("BasisRegistry: L_max must be >= 1");
  if (quad_order_ < L_max + 1) throw Unsupported("BasisRegistry: quadrature order too low for L_max");
  table_degree_ = L_max + 2;
  tab_ = T::build(table_degree_ + 1);
  calibrate();

  // normalization constants by product quadrature
  const int M = mode_count(L_max_);
  norm_.assign(M, 1.0);
  scale_.assign(M, 0.0);
  const SphereGrid grid = sphere_product_grid(quad_order_, 2 * quad_order_);
  std::vector<double> acc(M, 0.0), q;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vec3& p = grid.points[j];
    legendre_all(tab_, p[2], q);
    for (int i = 0; i < M; ++i) {
      const EigenfieldIndex idx = mode_at(i);
      int m;
      bool sine;
      mode_of_k(idx.k, m, sine);
      const int n = degree_[idx.ell];
      const Vec3 a = (1.0 / std::sqrt(n * (n + 1.0))) * curl_mode(tab_, q, n, m, sine, p);
      acc[i] += grid.weights[j] * dot(a, a);
    }
  }
  for (int i = 0; i < M; ++i) {
    const int n = degree_[mode_at(i).ell];
    norm_[i] = 1.0 / std::sqrt(acc[i]);
    scale_[i] = norm_[i] / std::sqrt(n * (n + 1.0));
  }
}

void BasisRegistry::calibrate() {
  // For each ell, find the harmonic degree whose curl fields reproduce
  // (d/D) sum_k <A(x),A(y)> = d t gamma_ell(t) - (1-t^2) gamma_ell'(t).
  const int d = 2;
  const std::array<std::pair<Vec3, Vec3>, 3> pairs{{
      {Vec3{0.0, 0.0, 1.0}, Vec3{std::sin(0.7), 0.0, std::cos(0.7)}},
      {Vec3{0.6, 0.0, 0.8}, Vec3{0.0, 0.6, 0.8}},
      {Vec3{1.0, 0.0, 0.0}, Vec3{-0.28, 0.96, 0.0}},
  }};
  degree_.assign(L_max_ + 1, 0);
  std::vector<double> qx, qy, gam, dgam;
  for (int ell = 1; ell <= L_max_; ++ell) {
    int found = 0, matches = 0;
    for (int n = 1; n <= table_degree_; ++n) {
      double err = 0.0;
      for (const auto& [x, y] : pairs) {
        legendre_all(tab_, x[2], qx);
        legendre_all(tab_, y[2], qy);
        double s = 0.0;
        for (int m = 0; m <= n; ++m) {
          for (int sn = 0; sn < (m == 0 ? 1 : 2); ++sn) {
            const Vec3 ax = curl_mode(tab_, qx, n, m, sn == 1, x);
            const Vec3 ay = curl_mode(tab_, qy, n, m, sn == 1, y);
            s += dot(ax, ay) / (n * (n + 1.0));
          }
        }
        s *= static_cast<double>(d) / (2 * n + 1);
        const double t = dot(x, y);
        gamma_all(d, ell, t, gam, dgam);
        const double closed = d * t * gam[ell - 1] - (1.0 - t * t) * dgam[ell - 1];
        err = std::max(err, std::abs(s - closed));
      }
      if (err <= 1e-6) {
        if (matches == 0) found = n;
        ++matches;
      }
    }
    if (matches != 1) {
      throw CalibrationError("no unique harmonic degree reproduces the pair-sum identity at ell = " +
                             std::to_string(ell));
    }
    degree_[ell] = found;
  }
}

int BasisRegistry::dim_eigenspace(int ell) const {
  if (ell < 1 || ell > L_max_) throw Unsupported("dim_eigenspace: ell outside 1..L_max");
  return 2 * degree_[ell] + 1;
}

int BasisRegistry::harmonic_degree(int ell) const {
  if (ell < 1 || ell > L_max_) throw Unsupported("harmonic_degree: ell outside 1..L_max");
  return degree_[ell];
}

double BasisRegistry::eigenvalue(int ell) const { return (ell + 1.0) * (ell + d() - 2.0); }

int BasisRegistry::mode_count(int ell_max) const {
  if (ell_max < 0 || ell_max > L_max_) throw Unsupported("mode_count: ell outside 0..L_max");
  int c = 0;
  for (int l = 1; l <= ell_max; ++l) c += 2 * degree_[l] + 1;
  return c;
}

int BasisRegistry::mode_index(EigenfieldIndex idx) const {
  if (idx.ell < 1 || idx.ell > L_max_) throw Unsupported("eigenfield index beyond L_max");
  if (idx.k < 1 || idx.k > dim_eigenspace(idx.ell)) throw Unsupported("eigenfield index k out of range");
  return mode_count(idx.ell - 1) + idx.k - 1;
}

EigenfieldIndex BasisRegistry::mode_at(int flat) const {
  if (flat < 0) throw Unsupported("negative mode index");
  for (int l = 1; l <= L_max_; ++l) {
    const int D = 2 * degree_[l] + 1;
    if (flat < D) return {l, flat + 1};
    flat -= D;
  }
  throw Unsupported("mode index beyond L_max");
}

Vec3 BasisRegistry::eval(EigenfieldIndex idx, const Vec3& x) const {
  const int i = mode_index(idx);
  std::vector<double> q;
  legendre_all(tab_, x[2], q);
  int m;
  bool sine;
  mode_of_k(idx.k, m, sine);
  return scale_[i] * curl_mode(tab_, q, degree_[idx.ell], m, sine, x);
}

TangentVector<3> BasisRegistry::eval_eigenfield(EigenfieldIndex idx, const S2Point& x) const {
  return {x, eval(idx, x.coords())};
}

void BasisRegistry::eval_all(const Vec3& x, int ell_max, std::span<Vec3> out) const {
  const int M = mode_count(ell_max);
  if (static_cast<int>(out.size()) < M) throw Unsupported("eval_all: output span too small");
  std::vector<double> q;
  legendre_all(tab_, x[2], q);
  for (int i = 0; i < M; ++i) {
    const EigenfieldIndex idx = mode_at(i);
    int m;
    bool sine;
    mode_of_k(idx.k, m, sine);
    out[i] = scale_[i] * curl_mode(tab_, q, degree_[idx.ell], m, sine, x);
  }
}

void BasisRegistry::synthesize(std::span<const double> coef, std::span<const Vec3> points,
                               std::span<Vec3> out) const {
  synthesize(simd::active_kernels(), coef, points, out);
}

void BasisRegistry::synthesize(const simd::KernelSet& ks, std::span<const double> coef,
                               std::span<const Vec3> points, std::span<Vec3> out) const {
  if (coef.size() > scale_.size()) throw Unsupported("synthesize: more coefficients than modes");
  if (out.size() < points.size()) throw Unsupported("synthesize: output span too small");
  // highest degree actually present
  int top = 0;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (coef[i] != 0.0) top = std::max(top, degree_[mode_at(static_cast<int>(i)).ell]);
  }
  if (top == 0) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(points.size()), Vec3{0.0, 0.0, 0.0});
    return;
  }
  thread_local std::vector<T> tables;
  if (static_cast<int>(tables.size()) <= top) tables.resize(top + 1);
  if (tables[top].degree != top || tables[top].a.empty()) tables[top] = T::build(top);
  const T& tab = tables[top];
  std::vector<double> alpha(tab.size(), 0.0), beta(tab.size(), 0.0);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (coef[i] == 0.0) continue;
    const EigenfieldIndex idx = mode_at(static_cast<int>(i));
    int m;
    bool sine;
    mode_of_k(idx.k, m, sine);
    const double v = coef[i] * scale_[i];
    (sine ? beta : alpha)[T::tri(degree_[idx.ell], m)] += v;
  }
  ks.synthesize_field(tab, alpha.data(), beta.data(), points.data(), out.data(), points.size());
}

std::string BasisRegistry::normalization_csv() const {
  nlohmann::ordered_json h;
  h["d"] = d();
  h["L_max"] = L_max_;
  h["quadrature_order"] = quad_order_;
  std::ostringstream os;
  os << "# " << h.dump() << "\nell,k,degree,normalization\n";
  for (int i = 0; i < static_cast<int>(norm_.size()); ++i) {
    const EigenfieldIndex idx = mode_at(i);
    os << idx.ell << ',' << idx.k << ',' << degree_[idx.ell] << ',' << format_double(norm_[i]) << "\n";
  }
  return os.str();
}

bool BasisRegistry::matches_normalization_csv(const std::string& csv, double tol) const {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) return false;
  const auto h = nlohmann::json::parse(line.substr(2), nullptr, false);
  if (h.is_discarded() || h.value("d", -1) != d() || h.value("L_max", -1) != L_max_ ||
      h.value("quadrature_order", -1) != quad_order_) {
    return false;
  }
  std::getline(in, line);
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[4];
    for (auto& s : f) std::getline(row, s, ',');
    if (i >= static_cast<int>(norm_.size())) return false;
    const EigenfieldIndex idx = mode_at(i);
    if (std::stoi(f[0]) != idx.ell || std::stoi(f[1]) != idx.k || std::stoi(f[2]) != degree_[idx.ell]) return false;
    if (std::abs(parse_double(f[3]) - norm_[i]) > tol) return false;
    ++i;
  }
  return i == static_cast<int>(norm_.size());
}

double verify_orthonormality(const BasisRegistry& reg, int L, int quadrature_order) {
  const int q = quadrature_order > 0 ? quadrature_order : reg.quadrature_order();
  const SphereGrid grid = sphere_product_grid(q, 2 * q);
  const int M = reg.mode_count(L);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(M, M);
  std::vector<Vec3> a(M);
  Eigen::MatrixXd F(3, M);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    reg.eval_all(grid.points[j], L, a);
    for (int i = 0; i < M; ++i) F.col(i) << a[i][0], a[i][1], a[i][2];
    gram.noalias() += grid.weights[j] * (F.transpose() * F);
  }
  return (gram - Eigen::MatrixXd::Identity(M, M)).cwiseAbs().maxCoeff();
}

int gram_rank(const BasisRegistry& reg, int ell, double tol) {
  const int q = reg.quadrature_order();
  const SphereGrid grid = sphere_product_grid(q, 2 * q);
  const int D = reg.dim_eigenspace(ell);
  const int off = reg.mode_count(ell - 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(D, D);
  std::vector<Vec3> a(reg.mode_count(ell));
  Eigen::MatrixXd F(3, D);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    reg.eval_all(grid.points[j], ell, a);
    for (int i = 0; i < D; ++i) F.col(i) << a[off + i][0], a[off + i][1], a[off + i][2];
    gram.noalias() += grid.weights[j] * (F.transpose() * F);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  int r = 0;
  for (int i = 0; i < D; ++i) r += es.eigenvalues()[i] > tol;
  return r;
}

std::pair<Vec3, Vec3> tangent_frame(const Vec3& x) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(x[i]) < std::abs(x[axis])) axis = i;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  Vec3 e1 = project_tangent(x, e);
  e1 = (1.0 / norm(e1)) * e1;
  return {e1, cross(x, e1)};
}

Vec3 covariant_self_derivative(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h) {
  const Vec3 v = reg.eval(idx, x);
  const Vec3 ap = reg.eval(idx, exp_map(x, h * v));
  const Vec3 am = reg.eval(idx, exp_map(x, -h * v));
  return project_tangent(x, (0.5 / h) * (ap - am));
}

Vec3 sum_gradient_identity(const BasisRegistry& reg, int ell, const Vec3& x, double h) {
  Vec3 s{0.0, 0.0, 0.0};
  for (int k = 1; k <= reg.dim_eigenspace(ell); ++k) s += covariant_self_derivative(reg, {ell, k}, x, h);
  return s;
}

PairSums spectral_pair_sums(const BasisRegistry& reg, int ell, const Vec3& x, const Vec3& y) {
  const int D = reg.dim_eigenspace(ell);
  const double f = static_cast<double>(reg.d()) / D;
  PairSums r;
  for (int k = 1; k <= D; ++k) {
    const Vec3 ax = reg.eval({ell, k}, x), ay = reg.eval({ell, k}, y);
    const double axy = dot(ax, y), ayx = dot(ay, x);
    r.s_a += dot(ax, ay);
    r.s_b += axy * axy;
    r.s_c += (axy + ayx) * (axy + ayx);
  }
  r.s_a *= f;
  r.s_b *= f;
  r.s_c *= f;
  return r;
}

DifferenceSums spectral_difference_sums(const BasisRegistry& reg, std::span<const double> b, const Vec3& x,
                                        const Vec3& y) {
  if (static_cast<int>(b.size()) > reg.L_max()) throw Error("spectral_difference_sums: spectrum exceeds registry");
  DifferenceSums r;
  const Vec3 dxy = x - y;
  for (int ell = 1; ell <= static_cast<int>(b.size()); ++ell) {
    const int D = reg.dim_eigenspace(ell);
    double s1 = 0.0, s2 = 0.0;
    for (int k = 1; k <= D; ++k) {
      const Vec3 da = reg.eval({ell, k}, x) - reg.eval({ell, k}, y);
      const double p = dot(dxy, da);
      s1 += dot(da, da);
      s2 += p * p;
    }
    const double f = b[ell - 1] * reg.d() / D;
    r.g1 += f * s1;
    r.g2 += f * s2;
  }
  return r;
}

double spectral_covariance(const BasisRegistry& reg, std::span<const double> b, const Vec3& x, const Vec3& u,
                           const Vec3& y, const Vec3& v) {
  if (static_cast<int>(b.size()) > reg.L_max()) throw Error("spectral_covariance: spectrum exceeds registry");
  double c = 0.0;
  for (int ell = 1; ell <= static_cast<int>(b.size()); ++ell) {
    const int D = reg.dim_eigenspace(ell);
    double s = 0.0;
    for (int k = 1; k <= D; ++k) s += dot(reg.eval({ell, k}, x), u) * dot(reg.eval({ell, k}, y), v);
    c += b[ell - 1] * reg.d() / D * s;
  }
  return c;
}

double numerical_divergence(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h) {
  const auto [e1, e2] = tangent_frame(x);
  double div = 0.0;
  for (const Vec3& e : {e1, e2}) {
    const Vec3 ap = reg.eval(idx, exp_map(x, h * e));
    const Vec3 am = reg.eval(idx, exp_map(x, -h * e));
    div += dot((0.5 / h) * (ap - am), e);
  }
  return div;
}

Vec3 rough_laplacian(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h) {
  const auto [e1, e2] = tangent_frame(x);
  const Vec3 a0 = reg.eval(idx, x);
  Vec3 lap{0.0, 0.0, 0.0};
  for (const Vec3& e : {e1, e2}) {
    const Vec3 xp = exp_map(x, h * e), xm = exp_map(x, -h * e);
    const Vec3 tp = parallel_transport(xp, x, reg.eval(idx, xp));
    const Vec3 tm = parallel_transport(xm, x, reg.eval(idx, xm));
    lap += (1.0 / (h * h)) * (tp + tm - 2.0 * a0);
  }
  return lap;
}

}  // namespace sphereflow
