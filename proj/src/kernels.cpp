#include "sphereflow/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sphereflow/errors.hpp"
#include "sphereflow/simd/kernels.hpp"

namespace sphereflow {

SpectrumConfig SpectrumConfig::power_law(int d, int L_max, double alpha, double b, double nu) {
  SpectrumConfig s;
  s.d = d;
  s.L_max = L_max;
  s.law = Law::power;
  s.alpha = alpha;
  s.b = b;
  s.nu = nu;
  s.validate();
  return s;
}

SpectrumConfig SpectrumConfig::explicit_law(int d, std::vector<double> b_ell, double nu) {
  SpectrumConfig s;
  s.d = d;
  s.L_max = static_cast<int>(b_ell.size());
  s.law = Law::explicit_list;
  s.coeffs = std::move(b_ell);
  s.nu = nu;
  s.validate();
  return s;
}

void SpectrumConfig::validate() const {
  if (d < 2) throw ConfigError("spectrum: d must be >= 2");
  if (L_max < 1) throw ConfigError("spectrum: L_max must be >= 1");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ConfigError("spectrum: nu must be finite and >= 0");
  if (law == Law::power) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("spectrum: alpha must be > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("spectrum: b must be > 0");
    if (L_max < 2) throw ConfigError("spectrum: power law needs L_max >= 2 (b_1 = 0)");
  } else {
    if (static_cast<int>(coeffs.size()) != L_max) throw ConfigError("spectrum: coefficient list length != L_max");
    for (double v : coeffs) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("spectrum: coefficients must be finite and >= 0");
    }
  }
  if (!(total() > 0.0)) throw ConfigError("spectrum: sum of coefficients must be positive");
}

double SpectrumConfig::b_ell(int ell) const {
  if (ell < 1 || ell > L_max) return 0.0;
  if (law == Law::explicit_list) return coeffs[ell - 1];
  if (ell == 1) return 0.0;
  return b / std::pow(static_cast<double>(ell - 1), 1.0 + alpha);
}

std::vector<double> SpectrumConfig::coefficients() const {
  std::vector<double> out(L_max);
  for (int l = 1; l <= L_max; ++l) out[l - 1] = b_ell(l);
  return out;
}

double SpectrumConfig::total() const {
  double s = 0.0;
  // smallest terms first
  for (int l = L_max; l >= 1; --l) s += b_ell(l);
  return s;
}

double SpectrumConfig::tail_bound() const {
  if (law == Law::explicit_list) return 0.0;
  const double L = L_max;
  return b * (std::pow(L, -(1.0 + alpha)) + std::pow(L, -alpha) / alpha);
}

std::string SpectrumConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (law == Law::power) {
    os << "power(alpha=" << alpha << ",b=" << b << ")";
  } else {
    os << "explicit(" << coeffs.size() << ")";
  }
  return os.str();
}

double c_d_constant(int d) {
  if (d < 1) throw Unsupported("c_d_constant: d < 1");
  // sin^d is a trigonometric polynomial of degree d; d + 2 points are plenty
  // but the rule is cheap, so use a generous count.
  const QuadratureRule r = gauss_legendre(d + 32, 0.0, std::numbers::pi);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(std::sin(r.nodes[i]), d);
  return s;
}

GammaQuadrature::GammaQuadrature(int d) : d_(d) {
  if (d < 2) throw Unsupported("gamma quadrature needs d >= 2");
}

int GammaQuadrature::exact_nodes(int L) const {
  const int p = (d_ % 2 == 0) ? d_ - 2 : d_ - 1;
  const int degree = std::max(0, L - 1) + p;
  return degree / 2 + 2;
}

int GammaQuadrature::nodes_for(int L, double theta) const {
  const int exact = exact_nodes(L);
  if (d_ % 2 != 0) return exact;
  // z^m with |z| = 1 on [-1,1] grows like exp(m sin(theta) eps) on the Bernstein
  // ellipse of parameter 1 + eps, so the effective band limit is ~ L sin(theta).
  const int p = d_ - 2;
  const double s = std::abs(std::sin(theta));
  const int banded = static_cast<int>(std::ceil(0.6 * std::max(0, L - 1) * s)) + 40 + p;
  return std::min(exact, banded);
}

std::shared_ptr<const QuadratureRule> GammaQuadrature::rule(int n) const {
  auto build = [this](int n) {
    auto r = std::make_shared<QuadratureRule>();
    if (d_ % 2 == 0) {
      *r = gauss_chebyshev_u(n);
      const int half = (d_ - 2) / 2;
      for (std::size_t j = 0; j < r->size(); ++j) r->weights[j] *= std::pow(1.0 - r->nodes[j] * r->nodes[j], half);
    } else {
      *r = gauss_legendre(n);
      const int half = (d_ - 1) / 2;
      for (std::size_t j = 0; j < r->size(); ++j) r->weights[j] *= std::pow(1.0 - r->nodes[j] * r->nodes[j], half);
    }
    double s = 0.0;
    for (double w : r->weights) s += w;
    for (double& w : r->weights) w /= s;
    return std::shared_ptr<const QuadratureRule>(std::move(r));
  };
  if (d_ % 2 == 0) return build(n);  // closed-form nodes, not worth caching
  std::lock_guard lock(mu_);
  auto it = cache_.find(n);
  if (it != cache_.end()) return it->second;
  auto r = build(n);
  cache_.emplace(n, r);
  return r;
}

const GammaQuadrature& gamma_quadrature(int d) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GammaQuadrature>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[d];
  if (!slot) slot = std::make_unique<GammaQuadrature>(d);
  return *slot;
}

namespace {
constexpr double kImagTolerance = 1e-12;

double clamp_t(double t) { return std::fmin(1.0, std::fmax(-1.0, t)); }
}  // namespace

double gamma_all(int d, int L, double t, std::vector<double>& gamma, std::vector<double>& dgamma) {
  t = clamp_t(t);
  gamma.assign(std::max(L, 0), 0.0);
  dgamma.assign(std::max(L, 0), 0.0);
  if (L < 1) return 0.0;
  const auto& q = gamma_quadrature(d);
  const auto rule = q.rule(q.nodes_for(L, std::acos(t)));
  const simd::PowerSumNodes nodes{rule->nodes.data(), rule->weights.data(), rule->size()};
  const double imag = simd::active_kernels().gamma_table(t, nodes, L, gamma.data(), dgamma.data());
  if (imag > kImagTolerance) throw Error("gamma_ell: imaginary part " + std::to_string(imag) + " exceeds tolerance");
  return imag;
}

double gamma_ell(int d, int ell, double t) {
  if (ell < 1) throw Unsupported("gamma_ell: ell < 1");
  std::vector<double> g, dg;
  gamma_all(d, ell, t, g, dg);
  return g.back();
}

double gamma_ell_prime(int d, int ell, double t) {
  if (ell < 1) throw Unsupported("gamma_ell_prime: ell < 1");
  std::vector<double> g, dg;
  gamma_all(d, ell, t, g, dg);
  return dg.back();
}

KernelEvaluator::KernelEvaluator(SpectrumConfig spec) : spec_(std::move(spec)) {
  spec_.validate();
  coef_ = spec_.coefficients();
  g0_ = spec_.total();
  c_ = 0.5 * g0_;
}

std::pair<double, double> KernelEvaluator::G_and_prime(double theta) const {
  const double t = clamp_t(std::cos(theta));
  const auto& q = gamma_quadrature(spec_.d);
  const auto rule = q.rule(q.nodes_for(spec_.L_max, theta));
  const simd::PowerSumNodes nodes{rule->nodes.data(), rule->weights.data(), rule->size()};
  double g = 0.0, dg = 0.0;
  simd::active_kernels().gamma_weighted_sums(t, nodes, spec_.L_max, coef_.data(), &g, &dg);
  return {g, -std::sin(theta) * dg};
}

double KernelEvaluator::G1(double theta) const {
  const auto [g, gp] = G_and_prime(theta);
  return 2.0 * spec_.d * (g0_ - std::cos(theta) * g) - 2.0 * std::sin(theta) * gp;
}

double KernelEvaluator::G2(double theta) const {
  const double s = std::sin(theta);
  return 2.0 * s * s * (g0_ - G(theta));
}

PhiPsi KernelEvaluator::phi_psi(double theta, double tol) const {
  const double t = clamp_t(std::cos(theta));
  const double dm1 = spec_.d - 1.0;
  std::vector<double> gam, dgam;
  gamma_all(spec_.d, spec_.L_max, t, gam, dgam);
  PhiPsi r;
  for (int l = spec_.L_max; l >= 1; --l) {
    const double bl = coef_[l - 1];
    r.phi_series += bl * (t * gam[l - 1] - (1.0 - t * t) / dm1 * dgam[l - 1]);
    r.psi_series += bl * (-gam[l - 1] - t / dm1 * dgam[l - 1]);
  }
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-12) {
    // endpoint limits: cot(theta) G'(theta) -> t * G''(endpoint) is only
    // available through the series, so both paths coincide there
    r.phi = r.phi_series;
    r.psi = r.psi_series;
  } else {
    const auto [g, gp] = G_and_prime(theta);
    r.phi = t * g + s / dm1 * gp;
    r.psi = -g + (t / s) / dm1 * gp;
  }
  r.discrepancy = std::max(std::abs(r.phi - r.phi_series), std::abs(r.psi - r.psi_series));
  if (r.discrepancy > tol * std::max(1.0, g0_)) {
    throw Error("phi_psi: series and G-relation disagree by " + std::to_string(r.discrepancy));
  }
  return r;
}

double KernelEvaluator::covariance(const Vec3& x, const Vec3& u, const Vec3& y, const Vec3& v) const {
  if (spec_.d != 2) throw Unsupported("covariance: embedded evaluation implemented for d = 2");
  auto tangent = [](const Vec3& p, const Vec3& w) {
    return std::abs(dot(w, p)) <= 1e-10 * std::max(norm(w), 1e-300) || norm(w) == 0.0;
  };
  if (!tangent(x, u) || !tangent(y, v)) throw NonTangent("covariance: vectors must be tangent at their base points");
  const PhiPsi pp = phi_psi(geodesic_distance(x, y));
  return pp.phi * dot(u, v) + pp.psi * dot(y, u) * dot(x, v);
}

double KernelEvaluator::G_second_at_zero(double h) const {
  auto R = [this](double th) { return G_prime(th) / th; };
  const double r0 = R(h), r1 = R(h / 2), r2 = R(h / 4);
  const double a0 = (4.0 * r1 - r0) / 3.0, a1 = (4.0 * r2 - r1) / 3.0;
  return (16.0 * a1 - a0) / 15.0;
}

double KernelEvaluator::regularity_constant(int grid) const {
  double best = 0.0;
  for (int i = 1; i <= grid; ++i) {
    const double th = std::numbers::pi * i / grid;
    best = std::max(best, std::abs(G_prime(th)) / th);
  }
  return best;
}

double KernelEvaluator::g1_quadratic_constant(int grid) const {
  auto f = [this](double th) { return G1(th) / (th * th); };
  std::vector<double> thetas;
  const double first = std::numbers::pi / grid;
  for (int k = 0; k < 16; ++k) thetas.push_back(1e-4 * std::pow(first / 1e-4, k / 16.0));
  for (int i = 1; i <= grid; ++i) thetas.push_back(std::numbers::pi * i / grid);
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double v = f(thetas[i]);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  // golden-section refinement on the bracketing interval
  double lo = arg > 0 ? thetas[arg - 1] : thetas[arg] * 0.5;
  double hi = arg + 1 < thetas.size() ? thetas[arg + 1] : thetas[arg];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = f(b);
    }
  }
  return std::max(best, std::max(fa, fb));
}

double covariance_gram_min_eigenvalue(const KernelEvaluator& ev, std::span<const Vec3> x, std::span<const Vec3> u) {
  if (x.size() != u.size()) throw Error("covariance_gram_min_eigenvalue: size mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = ev.covariance(x[i], u[i], x[j], u[j]);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double RatioLimits::relative_gap() const {
  return std::abs(from_values - from_derivative) / std::max(std::abs(from_values), std::abs(from_derivative));
}

RatioLimits rough_ratio_limits(double alpha, double b, int L, double theta) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw Unsupported("rough_ratio_limits: alpha must lie in (0,2)");
  const KernelEvaluator ev(SpectrumConfig::power_law(2, L, alpha, b, 1.0));
  const double g0_full = b * boost::math::zeta(1.0 + alpha);
  // Tail sum_{ell > L} b_ell; its gamma_ell(cos theta) is negligible once L theta >> 1.
  const double tail = g0_full - ev.G0();
  auto rv = [&](double th) { return (ev.G0() - ev.G(th) + tail) / (std::pow(th, alpha) * g0_full); };
  auto rd = [&](double th) { return -ev.G_prime(th) / (alpha * std::pow(th, alpha - 1.0) * g0_full); };
  // leading correction is O(theta^(2-alpha))
  const double f = std::pow(2.0, 2.0 - alpha);
  RatioLimits r;
  r.alpha = alpha;
  r.theta = theta;
  r.from_values = (f * rv(theta / 2) - rv(theta)) / (f - 1.0);
  r.from_derivative = (f * rd(theta / 2) - rd(theta)) / (f - 1.0);
  return r;
}

}  // namespace sphereflow
