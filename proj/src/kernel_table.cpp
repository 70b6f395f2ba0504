#include "sphereflow/kernel_table.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "sphereflow/errors.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

const std::vector<double>& KernelTable::column(Column c) const {
  switch (c) {
    case Column::G: return G;
    case Column::dG: return dG;
    case Column::G1: return G1;
    case Column::G2: return G2;
    case Column::phi: return phi;
    case Column::psi: return psi;
  }
  return G;
}

double KernelTable::interpolate(Column c, double th) const {
  const auto& y = column(c);
  const std::size_t n = theta.size();
  if (n < 4) throw Error("kernel table too small to interpolate");
  auto it = std::upper_bound(theta.begin(), theta.end(), th);
  std::size_t i = static_cast<std::size_t>(std::distance(theta.begin(), it));
  // stencil i-2 .. i+1 around the bracketing interval
  std::size_t lo = i >= 2 ? i - 2 : 0;
  lo = std::min(lo, n - 4);
  double acc = 0.0;
  for (std::size_t j = lo; j < lo + 4; ++j) {
    double w = 1.0;
    for (std::size_t k = lo; k < lo + 4; ++k) {
      if (k != j) w *= (th - theta[k]) / (theta[j] - theta[k]);
    }
    acc += w * y[j];
  }
  return acc;
}

std::string KernelTable::to_csv() const {
  nlohmann::ordered_json h;
  h["d"] = d;
  h["L_max"] = L_max;
  h["law"] = law;
  h["quadrature_nodes"] = quadrature_nodes;
  h["tail_bound"] = tail_bound;
  h["c"] = c;
  h["rows"] = theta.size();
  std::ostringstream os;
  os << "# " << h.dump() << "\n";
  os << "theta,G,dG,G1,G2,phi,psi";
  for (int l = 1; l <= L_max; ++l) os << ",gamma_" << l;
  for (int l = 1; l <= L_max; ++l) os << ",dgamma_" << l;
  os << "\n";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    os << format_double(theta[i]) << ',' << format_double(G[i]) << ',' << format_double(dG[i]) << ','
       << format_double(G1[i]) << ',' << format_double(G2[i]) << ',' << format_double(phi[i]) << ','
       << format_double(psi[i]);
    for (int l = 0; l < L_max; ++l) os << ',' << format_double(gamma[l][i]);
    for (int l = 0; l < L_max; ++l) os << ',' << format_double(dgamma[l][i]);
    os << "\n";
  }
  return os.str();
}

void KernelTable::write_csv(const std::string& path) const { atomic_write(path, to_csv()); }

KernelTable KernelTable::read_csv(const std::string& path) { return from_csv(read_file(path)); }

KernelTable KernelTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError("kernel table: missing JSON header");
  KernelTable t;
  try {
    const auto h = nlohmann::json::parse(line.substr(2));
    t.d = h.at("d").get<int>();
    t.L_max = h.at("L_max").get<int>();
    t.law = h.at("law").get<std::string>();
    t.quadrature_nodes = h.at("quadrature_nodes").get<int>();
    t.tail_bound = h.at("tail_bound").get<double>();
    t.c = h.at("c").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("kernel table header: ") + e.what());
  }
  if (!std::getline(in, line)) throw IoError("kernel table: missing column header");
  const std::size_t ncol = 7 + 2 * static_cast<std::size_t>(t.L_max);
  t.gamma.assign(t.L_max, {});
  t.dgamma.assign(t.L_max, {});
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != ncol) throw IoError("kernel table: wrong column count");
    t.theta.push_back(row[0]);
    t.G.push_back(row[1]);
    t.dG.push_back(row[2]);
    t.G1.push_back(row[3]);
    t.G2.push_back(row[4]);
    t.phi.push_back(row[5]);
    t.psi.push_back(row[6]);
    for (int l = 0; l < t.L_max; ++l) {
      t.gamma[l].push_back(row[7 + l]);
      t.dgamma[l].push_back(row[7 + t.L_max + l]);
    }
  }
  return t;
}

std::vector<double> kernel_theta_grid(int n_uniform, int n_log, double log_min) {
  std::vector<double> g;
  const double h = std::numbers::pi / (n_uniform - 1);
  for (int k = 0; k < n_log; ++k) g.push_back(log_min * std::pow(h / log_min, static_cast<double>(k) / n_log));
  for (int i = 0; i < n_uniform; ++i) g.push_back(i == n_uniform - 1 ? std::numbers::pi : i * h);
  std::sort(g.begin(), g.end());
  return g;
}

KernelTable build_kernel_table(const KernelEvaluator& ev, const std::vector<double>& theta) {
  KernelTable t;
  const auto& spec = ev.spectrum();
  t.d = spec.d;
  t.L_max = spec.L_max;
  t.law = spec.describe();
  t.quadrature_nodes = gamma_quadrature(spec.d).nodes_for(spec.L_max, std::numbers::pi / 2);
  t.tail_bound = spec.tail_bound();
  t.c = ev.c();
  t.theta = theta;
  const std::size_t n = theta.size();
  t.G.resize(n);
  t.dG.resize(n);
  t.G1.resize(n);
  t.G2.resize(n);
  t.phi.resize(n);
  t.psi.resize(n);
  t.gamma.assign(spec.L_max, std::vector<double>(n));
  t.dgamma.assign(spec.L_max, std::vector<double>(n));
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::vector<double> gam, dgam;
    for (std::size_t i = b; i < e; ++i) {
      const double th = theta[i];
      const auto [g, gp] = ev.G_and_prime(th);
      t.G[i] = g;
      t.dG[i] = gp;
      t.G1[i] = 2.0 * spec.d * (ev.G0() - std::cos(th) * g) - 2.0 * std::sin(th) * gp;
      t.G2[i] = 2.0 * std::sin(th) * std::sin(th) * (ev.G0() - g);
      const PhiPsi pp = ev.phi_psi(th);
      t.phi[i] = pp.phi;
      t.psi[i] = pp.psi;
      gamma_all(spec.d, spec.L_max, std::cos(th), gam, dgam);
      for (int l = 0; l < spec.L_max; ++l) {
        t.gamma[l][i] = gam[l];
        t.dgamma[l][i] = dgam[l];
      }
    }
  });
  return t;
}

}  // namespace sphereflow
