#include "sphereflow/drift.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "sphereflow/errors.hpp"
#include "sphereflow/io.hpp"

namespace sphereflow {

DriftField::DriftField(int L_max, int n_modes, int n_times, double t0, double dt_grid)
    : L_max_(L_max), n_modes_(n_modes), n_times_(n_times), t0_(t0), dt_grid_(dt_grid) {
  if (n_modes < 0 || n_times < 1 || !(dt_grid > 0.0)) throw ConfigError("DriftField: invalid shape");
  u_.assign(static_cast<std::size_t>(n_modes) * n_times, 0.0);
}

DriftField DriftField::zero(const BasisRegistry& reg) { return DriftField(reg.L_max(), reg.mode_count(), 1, 0.0, 1.0); }

DriftField DriftField::rigid_rotation(const BasisRegistry& reg, const Vec3& omega) {
  // A_{1,1} = sqrt(3/2) e_z x x, A_{1,2} = sqrt(3/2) e_x x x, A_{1,3} = sqrt(3/2) e_y x x.
  DriftField f = zero(reg);
  const double s = std::sqrt(2.0 / 3.0) * std::sqrt(1.0 + reg.eigenvalue(1));
  f.raw(0, 0) = s * omega[2];
  f.raw(1, 0) = s * omega[0];
  f.raw(2, 0) = s * omega[1];
  return f;
}

bool DriftField::is_zero() const {
  return std::all_of(u_.begin(), u_.end(), [](double v) { return v == 0.0; });
}

int DriftField::time_index(double t) const {
  const double j = std::floor((t - t0_) / dt_grid_);
  if (!(j > 0.0)) return 0;
  return static_cast<int>(std::min<double>(j, n_times_ - 1));
}

void DriftField::coefficients(const BasisRegistry& reg, double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const int j = time_index(t);
  const int n = std::min<int>(n_modes_, static_cast<int>(out.size()));
  for (int i = 0; i < n; ++i) {
    const double v = raw(i, j);
    if (v != 0.0) out[i] = v / std::sqrt(1.0 + reg.eigenvalue(reg.mode_at(i).ell));
  }
}

Vec3 DriftField::eval(const BasisRegistry& reg, double t, const Vec3& x) const {
  std::vector<double> coef(n_modes_);
  coefficients(reg, t, coef);
  std::vector<Vec3> a(n_modes_);
  reg.eval_all(x, reg.L_max(), a);
  Vec3 r{0.0, 0.0, 0.0};
  for (int i = 0; i < n_modes_; ++i) r += coef[i] * a[i];
  return r;
}

double DriftField::l2_norm_sum() const {
  double s = 0.0;
  for (int i = 0; i < n_modes_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n_times_; ++j) acc += raw(i, j) * raw(i, j) * dt_grid_;
    s += std::sqrt(acc);
  }
  return s;
}

std::string DriftField::to_csv() const {
  nlohmann::ordered_json h;
  h["L_max"] = L_max_;
  h["n_modes"] = n_modes_;
  h["n_times"] = n_times_;
  h["t0"] = t0_;
  h["dt_grid"] = dt_grid_;
  h["scaling"] = "(1+c_ell)^(-1/2)";
  std::ostringstream os;
  os << "# " << h.dump() << "\nell,k,t_index,value\n";
  // Only the nonzero entries are listed; absent rows are zero.
  for (int j = 0; j < n_times_; ++j) {
    for (int i = 0; i < n_modes_; ++i) {
      if (raw(i, j) == 0.0) continue;
      int ell = 1, k = i + 1;
      while (k > 2 * ell + 1) {
        k -= 2 * ell + 1;
        ++ell;
      }
      os << ell << ',' << k << ',' << j << ',' << format_double(raw(i, j)) << "\n";
    }
  }
  return os.str();
}

DriftField DriftField::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError("drift file: missing JSON header");
  DriftField f;
  try {
    const auto h = nlohmann::json::parse(line.substr(2));
    f = DriftField(h.at("L_max").get<int>(), h.at("n_modes").get<int>(), h.at("n_times").get<int>(),
                   h.at("t0").get<double>(), h.at("dt_grid").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("drift header: ") + e.what());
  }
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string c[4];
    for (auto& s : c) std::getline(row, s, ',');
    const int ell = std::stoi(c[0]), k = std::stoi(c[1]), j = std::stoi(c[2]);
    if (ell < 1 || k < 1 || k > 2 * ell + 1 || j < 0 || j >= f.n_times_) throw IoError("drift file: bad index");
    const int mode = ell * ell - 1 + (k - 1);
    if (mode >= f.n_modes_) throw IoError("drift file: mode beyond n_modes");
    f.raw(mode, j) = parse_double(c[3]);
  }
  return f;
}

}  // namespace sphereflow
