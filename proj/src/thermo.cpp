#include "rgbp/thermo.hpp"

#include <algorithm>
#include <cmath>

namespace rgbp {

namespace {

// Regions containing the given vertex/interaction, smallest joint space
// first.
std::vector<int> by_size(const RegionGraph& rg, const std::vector<int>& regions) {
  std::vector<int> out = regions;
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    return rg.region(a).vertices.size() < rg.region(b).vertices.size();
  });
  return out;
}

struct DigitView {
  std::vector<std::size_t> stride, radix;
  explicit DigitView(const Region& reg, const FactorGraph& fg) {
    std::size_t s = 1;
    for (int v : reg.vertices) {
      stride.push_back(s);
      radix.push_back(static_cast<std::size_t>(fg.vertex(v).alphabet_size));
      s *= radix.back();
    }
  }
  std::size_t digit(std::size_t idx, std::size_t k) const {
    return (idx / stride[k]) % radix[k];
  }
};

std::size_t digit_position(const Region& reg, int vertex) {
  auto it = std::lower_bound(reg.vertices.begin(), reg.vertices.end(), vertex);
  return static_cast<std::size_t>(it - reg.vertices.begin());
}

double self_expectation(Engine& eng, int region, int vertex) {
  const Region& reg = eng.region_graph().region(region);
  const VertexSpec& vs = eng.factor_graph().vertex(vertex);
  DigitView d(reg, eng.factor_graph());
  const std::size_t k = digit_position(reg, vertex);
  const std::vector<double>& w = eng.region_omega(region);
  double e = 0;
  for (std::size_t idx = 0; idx < w.size(); ++idx)
    e += w[idx] * vs.self_energy[d.digit(idx, k)];
  return e;
}

double interaction_expectation(Engine& eng, int region, int a) {
  const Region& reg = eng.region_graph().region(region);
  const InteractionSpec& t = eng.factor_graph().interaction(a);
  DigitView d(reg, eng.factor_graph());
  std::vector<std::size_t> pos, tstride;
  std::size_t s = 1;
  for (int m : t.members) {
    pos.push_back(digit_position(reg, m));
    tstride.push_back(s);
    s *= static_cast<std::size_t>(eng.factor_graph().vertex(m).alphabet_size);
  }
  const std::vector<double>& w = eng.region_omega(region);
  double e = 0;
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    std::size_t aidx = 0;
    for (std::size_t k = 0; k < pos.size(); ++k)
      aidx += tstride[k] * d.digit(idx, pos[k]);
    e += w[idx] * t.energy[aidx];
  }
  return e;
}

}  // namespace

double free_energy(Engine& eng) {
  if (!(eng.beta() > 0))
    throw ConfigError("free energy is ill-posed at beta = 0; report entropy instead");
  const RegionGraph& rg = eng.region_graph();
  double acc = 0;
  for (int r = 0; r < rg.num_regions(); ++r)
    acc += rg.region(r).counting_number * eng.log_region_z(r);
  return -acc / (eng.beta() * eng.factor_graph().num_vertices());
}

std::vector<std::vector<double>> region_marginals(Engine& eng) {
  std::vector<std::vector<double>> out(eng.region_graph().num_regions());
  for (int r = 0; r < eng.region_graph().num_regions(); ++r)
    out[r] = eng.region_omega(r);
  return out;
}

std::vector<double> vertex_marginal(Engine& eng, int vertex) {
  const RegionGraph& rg = eng.region_graph();
  const std::vector<int> regs = by_size(rg, rg.regions_with_vertex(vertex));
  if (regs.empty()) throw StructureError("vertex not covered by any region");
  const int r = regs.front();
  const Region& reg = rg.region(r);
  DigitView d(reg, eng.factor_graph());
  const std::size_t k = digit_position(reg, vertex);
  std::vector<double> marg(d.radix[k], 0.0);
  const std::vector<double>& w = eng.region_omega(r);
  for (std::size_t idx = 0; idx < w.size(); ++idx) marg[d.digit(idx, k)] += w[idx];
  return marg;
}

ThermoReport observables(Engine& eng) {
  const RegionGraph& rg = eng.region_graph();
  const FactorGraph& fg = eng.factor_graph();
  const int n = fg.num_vertices();
  ThermoReport rep;
  rep.beta = eng.beta();
  rep.converged = eng.state().residual < eng.config().tol;
  rep.residual = eng.state().residual;
  rep.iters = eng.state().iteration;

  double u_total = 0;
  auto take_term = [&](const std::vector<int>& regions, auto&& expect) {
    const std::vector<int> regs = by_size(rg, regions);
    const double e0 = expect(regs.at(0));
    if (regs.size() > 1)
      rep.max_term_discrepancy =
          std::max(rep.max_term_discrepancy, std::abs(e0 - expect(regs[1])));
    u_total += e0;
  };
  for (int a = 0; a < fg.num_interactions(); ++a)
    take_term(rg.regions_with_interaction(a),
              [&](int r) { return interaction_expectation(eng, r, a); });
  for (int i = 0; i < n; ++i)
    take_term(rg.regions_with_vertex(i),
              [&](int r) { return self_expectation(eng, r, i); });
  rep.energy_density = u_total / n;
  if (rep.max_term_discrepancy > 1e-6)
    rep.warnings.push_back("cross-region energy-term disagreement " +
                           std::to_string(rep.max_term_discrepancy));

  if (fg.all_binary()) {
    double m = 0;
    for (int i = 0; i < n; ++i) {
      const std::vector<double> p = vertex_marginal(eng, i);
      m += p[1] - p[0];
    }
    rep.magnetization = m / n;
  }

  if (eng.beta() > 0) {
    rep.free_energy_density = free_energy(eng);
    rep.entropy_density = eng.beta() * (rep.energy_density - rep.free_energy_density);
  } else {
    rep.beta_zero_limit = true;
    rep.free_energy_density = std::numeric_limits<double>::quiet_NaN();
    double s = 0;
    for (int r = 0; r < rg.num_regions(); ++r) {
      const std::vector<double>& w = eng.region_omega(r);
      double h = 0;
      for (double p : w)
        if (p > 0) h -= p * std::log(p);
      s += rg.region(r).counting_number * h;
    }
    rep.entropy_density = s / n;
  }
  return rep;
}

}  // namespace rgbp
