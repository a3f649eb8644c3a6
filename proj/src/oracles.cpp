#include "rgbp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rgbp {

namespace {

std::uint64_t joint_space_size(const FactorGraph& fg, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (const VertexSpec& v : fg.vertices()) {
    total *= static_cast<std::uint64_t>(v.alphabet_size);
    if (total > cap)
      throw DimensionError("joint space exceeds the enumeration cap of " +
                           std::to_string(cap) + " states");
  }
  return total;
}

bool advance(std::vector<State>& config, const FactorGraph& fg) {
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (++config[i] < fg.vertex(static_cast<int>(i)).alphabet_size) return true;
    config[i] = 0;
  }
  return false;
}

}  // namespace

ExactResult enumerate_exact(const FactorGraph& fg, double beta, std::uint64_t state_cap) {
  joint_space_size(fg, state_cap);
  const int n = fg.num_vertices();

  std::vector<State> config(n, 0);
  double e_min = std::numeric_limits<double>::infinity();
  do {
    e_min = std::min(e_min, fg.total_energy(config));
  } while (advance(config, fg));

  ExactResult r;
  r.vertex_marginals.resize(n);
  for (int i = 0; i < n; ++i) r.vertex_marginals[i].assign(fg.vertex(i).alphabet_size, 0.0);

  double zs = 0;       // sum of exp(-beta (E - e_min))
  double es = 0;       // sum of E * weight
  std::fill(config.begin(), config.end(), 0);
  do {
    const double e = fg.total_energy(config);
    const double w = std::exp(-beta * (e - e_min));
    zs += w;
    es += e * w;
    for (int i = 0; i < n; ++i) r.vertex_marginals[i][config[i]] += w;
  } while (advance(config, fg));

  r.log_z = std::log(zs) - beta * e_min;
  const double u_total = es / zs;
  for (int i = 0; i < n; ++i)
    for (double& p : r.vertex_marginals[i]) p /= zs;

  r.energy_density = u_total / n;
  // S = ln Z + beta U, valid down to beta = 0.
  r.entropy_density = (r.log_z + beta * u_total) / n;
  r.free_energy_density =
      beta > 0 ? -r.log_z / (beta * n) : std::numeric_limits<double>::quiet_NaN();
  r.magnetization = 0;
  if (fg.all_binary()) {
    double m = 0;
    for (int i = 0; i < n; ++i)
      m += r.vertex_marginals[i][1] - r.vertex_marginals[i][0];
    r.magnetization = m / n;
  }
  return r;
}

std::vector<double> exact_subset_marginal(const FactorGraph& fg, double beta,
                                          const std::vector<int>& vertices,
                                          std::uint64_t state_cap) {
  joint_space_size(fg, state_cap);
  std::vector<int> vs = vertices;
  std::sort(vs.begin(), vs.end());

  std::size_t tsize = 1;
  std::vector<std::size_t> stride(vs.size());
  for (std::size_t k = 0; k < vs.size(); ++k) {
    stride[k] = tsize;
    tsize *= static_cast<std::size_t>(fg.vertex(vs[k]).alphabet_size);
  }

  std::vector<State> config(fg.num_vertices(), 0);
  double e_min = std::numeric_limits<double>::infinity();
  do {
    e_min = std::min(e_min, fg.total_energy(config));
  } while (advance(config, fg));

  std::vector<double> marg(tsize, 0.0);
  std::fill(config.begin(), config.end(), 0);
  do {
    const double w = std::exp(-beta * (fg.total_energy(config) - e_min));
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vs.size(); ++k)
      idx += stride[k] * static_cast<std::size_t>(config[vs[k]]);
    marg[idx] += w;
  } while (advance(config, fg));

  double z = 0;
  for (double v : marg) z += v;
  for (double& v : marg) v /= z;
  return marg;
}

double transfer_matrix_log_z(const Lattice& lat, double beta) {
  if (lat.spec.dim != 2)
    throw DimensionError("transfer-matrix oracle handles dim=2 only");
  const int L = lat.spec.side_length;
  if (L > 14) throw DimensionError("transfer-matrix width capped at 14");
  const std::size_t ns = 1ull << L;
  const FactorGraph& fg = lat.graph;

  // Diagonal column weights: per-column self energies plus vertical
  // (wrapping) bonds.  diag[x][s] = -E_column.
  std::vector<std::vector<double>> diag(L, std::vector<double>(ns, 0.0));
  for (int x = 0; x < L; ++x) {
    for (std::size_t s = 0; s < ns; ++s) {
      double e = 0;
      for (int y = 0; y < L; ++y) {
        const double sy = (s >> y) & 1 ? 1.0 : -1.0;
        const double syn = (s >> ((y + 1) % L)) & 1 ? 1.0 : -1.0;
        const VertexSpec& v = fg.vertex(lat.site(x, y));
        e += v.self_energy[(s >> y) & 1];
        e += -lat.coupling(lat.bond(lat.site(x, y), 1)) * sy * syn;
      }
      diag[x][s] = -e;
    }
  }

  std::vector<double> v(ns), w(ns);
  double log_total = -std::numeric_limits<double>::infinity();
  for (std::size_t s0 = 0; s0 < ns; ++s0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[s0] = 1.0;
    double log_scale = 0.0;
    for (int x = 0; x < L; ++x) {
      for (std::size_t s = 0; s < ns; ++s) v[s] *= std::exp(beta * diag[x][s]);
      // Horizontal bonds from column x to x+1, one row at a time.
      for (int y = 0; y < L; ++y) {
        const double j = lat.coupling(lat.bond(lat.site(x, y), 0));
        const double a = std::exp(beta * j), b = std::exp(-beta * j);
        for (std::size_t s = 0; s < ns; ++s)
          w[s] = a * v[s] + b * v[s ^ (1ull << y)];
        v.swap(w);
      }
      double mx = *std::max_element(v.begin(), v.end());
      if (!(mx > 0) || !std::isfinite(mx))
        throw NumericRangeError("transfer-matrix vector lost positivity");
      for (double& t : v) t /= mx;
      log_scale += std::log(mx);
    }
    const double contrib = log_scale + std::log(v[s0]);
    const double hi = std::max(log_total, contrib);
    log_total = hi + std::log(std::exp(log_total - hi) + std::exp(contrib - hi));
  }
  return log_total;
}

namespace {

// Mean over [0,2pi)^2 of ln(cosh^2 2b - sinh 2b (cos t1 + cos t2)),
// by grid doubling; the periodic trapezoid rule converges spectrally
// away from the critical coupling.
double onsager_integral_mean(double beta) {
  const double c2 = std::cosh(2 * beta) * std::cosh(2 * beta);
  const double sh = std::sinh(2 * beta);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int n = 16; n <= 8192; n *= 2) {
    double s = 0;
    std::vector<double> ct(n);
    for (int i = 0; i < n; ++i)
      ct[i] = std::cos(2 * std::numbers::pi * i / n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += std::log(c2 - sh * (ct[i] + ct[j]));
    s /= static_cast<double>(n) * n;
    if (!std::isnan(prev) && std::abs(s - prev) < 1e-12 * std::max(1.0, std::abs(s)))
      return s;
    prev = s;
  }
  throw NumericRangeError("Onsager quadrature failed to converge");
}

double onsager_beta_f(double beta) {  // beta * f
  return -(std::numbers::ln2 + 0.5 * onsager_integral_mean(beta));
}

}  // namespace

double onsager_beta_c() { return 0.5 * std::log(1.0 + std::sqrt(2.0)); }

OnsagerResult onsager(double beta) {
  if (!(beta > 0)) throw DimensionError("Onsager forms require beta > 0");
  OnsagerResult r;
  r.free_energy_density = onsager_beta_f(beta) / beta;
  // u = d(beta f)/d beta, Richardson-extrapolated centered differences.
  const double h = 1e-4;
  auto d = [&](double step) {
    return (onsager_beta_f(beta + step) - onsager_beta_f(beta - step)) / (2 * step);
  };
  r.energy_density = (4 * d(h / 2) - d(h)) / 3;
  r.entropy_density = beta * (r.energy_density - r.free_energy_density);
  r.magnetization =
      beta > onsager_beta_c()
          ? std::pow(1.0 - std::pow(std::sinh(2 * beta), -4.0), 0.125)
          : 0.0;
  return r;
}

}  // namespace rgbp
