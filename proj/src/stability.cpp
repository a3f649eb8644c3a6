#include "rgbp/stability.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rgbp/lattice.hpp"

namespace rgbp {

namespace {

void require_zero_field(const FactorGraph& fg) {
  for (const VertexSpec& v : fg.vertices()) {
    const auto [lo, hi] =
        std::minmax_element(v.self_energy.begin(), v.self_energy.end());
    if (*hi - *lo != 0.0)
      throw ConfigError("paramagnetic analysis requires zero external field");
  }
}

struct ActiveLayout {
  std::vector<int> edges;
  std::vector<std::size_t> offset;  // per active edge, into the flat vector
  std::size_t total = 0;
};

ActiveLayout layout_of(const Engine& eng) {
  ActiveLayout l;
  const int ne = eng.region_graph().num_edges();
  for (int e = 0; e < ne; ++e) {
    if (!eng.edge_active(e)) continue;
    l.edges.push_back(e);
    l.offset.push_back(l.total);
    l.total += eng.message_size(e);
  }
  return l;
}

void flatten(const ActiveLayout& l, const MessageState& s, std::vector<double>& out) {
  out.resize(l.total);
  for (std::size_t k = 0; k < l.edges.size(); ++k) {
    const std::vector<double>& t = s.tables[l.edges[k]];
    std::copy(t.begin(), t.end(), out.begin() + l.offset[k]);
  }
}

// Remove the per-table constant direction (the normalization null
// space of the sweep map).
void project_zero_sum(const ActiveLayout& l, const Engine& eng, std::vector<double>& v) {
  for (std::size_t k = 0; k < l.edges.size(); ++k) {
    const std::size_t n = eng.message_size(l.edges[k]);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += v[l.offset[k] + i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v[l.offset[k] + i] -= mean;
  }
}

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

// The fixed point carries strongly oscillatory modes (negative real
// eigenvalues that grow like -e^{2 beta}) at every temperature, so the
// undamped map has spectral radius above 1 everywhere and cannot locate
// the transition.  A damped probe maps an eigenvalue mu of the undamped
// sweep to (1 - lambda) + lambda * mu: the oscillatory modes are pulled
// inside the unit circle while the modulus-1 crossing still happens
// exactly at mu = 1, the symmetry-breaking direction, independent of
// lambda.
const double kProbeDamping = 0.2;

MessageState paramagnetic_fixed_point(const RegionGraph& rg, const FactorGraph& fg,
                                      double beta, EngineConfig cfg) {
  require_zero_field(fg);
  cfg.z2_project = true;
  cfg.init = InitKind::uniform;
  Engine eng(rg, fg, beta, cfg);
  eng.solve();
  return eng.state();
}

double spectral_radius(Engine& probe, const MessageState& fixed_point, std::uint64_t seed,
                       int max_iters, double tol, std::vector<double>* warm,
                       bool* converged) {
  const ActiveLayout lay = layout_of(probe);
  if (converged) *converged = false;

  probe.set_state(fixed_point);
  probe.sweep();
  std::vector<double> base;
  flatten(lay, probe.state(), base);

  // A warm-start vector from a nearby temperature usually contains
  // the leading eigendirection, but it can also have converged onto the
  // fixed-manifold floor with no overlap left on a newly growing mode;
  // blending in a little fresh randomness guarantees every mode keeps a
  // foothold without losing the tracking benefit.
  std::vector<double> v(lay.total);
  SplitMix64 rng(seed);
  for (double& x : v) x = 2.0 * rng.next_double() - 1.0;
  if (warm && warm->size() == lay.total) {
    const double vn = norm2(v);
    for (std::size_t i = 0; i < lay.total; ++i) v[i] = (*warm)[i] + 0.01 * v[i] / vn;
  }
  project_zero_sum(lay, probe, v);
  double nv = norm2(v);
  if (!(nv > 0)) throw NumericRangeError("degenerate power-iteration start vector");
  for (double& x : v) x /= nv;

  std::vector<double> fpv;
  flatten(lay, fixed_point, fpv);

  const double delta = 1e-6;
  std::vector<double> w;
  MessageState pert;
  // One directional finite difference of the sweep map at the fixed
  // point, in per-entry relative coordinates: w = D^-1 J D v with
  // D = diag(fixed point).  The similarity transform leaves the
  // spectrum untouched while keeping the perturbed tables positive even
  // where message entries are many orders of magnitude apart.
  auto apply = [&](const std::vector<double>& dir) {
    pert = fixed_point;
    for (std::size_t e = 0; e < lay.edges.size(); ++e) {
      std::vector<double>& t = pert.tables[lay.edges[e]];
      for (std::size_t i = 0; i < t.size(); ++i)
        t[i] *= 1.0 + delta * dir[lay.offset[e] + i];
    }
    probe.set_state(std::move(pert));
    probe.sweep();
    flatten(lay, probe.state(), w);
    for (std::size_t i = 0; i < lay.total; ++i)
      w[i] = (w[i] - base[i]) / (delta * std::max(fpv[i], 1e-300));
    project_zero_sum(lay, probe, w);
  };

  // The redundant message parametrization has a manifold of equivalent
  // fixed points, which shows up as an eigenvalue exactly 1 of the sweep
  // map.  Replacing v by (J - I) v removes that component so the power
  // iteration can resolve a growing mode just outside the unit circle
  // instead of stalling on the manifold directions.
  auto purge_fixed_directions = [&]() {
    apply(v);
    for (std::size_t i = 0; i < lay.total; ++i) v[i] = w[i] - v[i];
    const double n = norm2(v);
    if (n > 1e-300)
      for (double& x : v) x /= n;
  };
  purge_fixed_directions();

  std::vector<double> growth, estimates;
  double rho = 0;
  for (int k = 0; k < max_iters; ++k) {
    apply(v);
    const double g = norm2(w);
    if (g < 1e-300) {
      rho = 0;
      if (converged) *converged = true;
      break;
    }
    for (std::size_t i = 0; i < lay.total; ++i) v[i] = w[i] / g;
    growth.push_back(g);

    // Geometric-mean window rides out the oscillation of complex or
    // near-degenerate leading eigenvalue pairs.
    const int win = 8;
    if (static_cast<int>(growth.size()) >= win) {
      double lg = 0;
      for (int j = 0; j < win; ++j) lg += std::log(growth[growth.size() - 1 - j]);
      const double est = std::exp(lg / win);
      estimates.push_back(est);
      rho = est;
      if (estimates.size() >= 5) {
        double lo = est, hi = est;
        for (std::size_t j = estimates.size() - 5; j < estimates.size(); ++j) {
          lo = std::min(lo, estimates[j]);
          hi = std::max(hi, estimates[j]);
        }
        if (hi - lo < tol * std::max(est, 1e-12)) {
          if (converged) *converged = true;
          break;
        }
      }
    }
  }
  if (warm) *warm = v;
  return rho;
}

double spectral_radius(const RegionGraph& rg, const FactorGraph& fg,
                       const MessageState& fixed_point, double beta, EngineConfig cfg) {
  cfg.damping = kProbeDamping;
  cfg.schedule = Schedule::jacobi;
  cfg.z2_project = false;
  Engine probe(rg, fg, beta, cfg);
  return spectral_radius(probe, fixed_point);
}

StabilityResult find_beta_c(const RegionGraph& rg, const FactorGraph& fg, EngineConfig cfg,
                            double beta_lo, double beta_hi, double rho_tol,
                            double beta_tol) {
  require_zero_field(fg);
  // Stability is a property of the fixed point under the full message
  // map, so both the solve and the probe run with every edge active;
  // the reduced active set is a solver device and its one-sweep map has
  // spurious oscillatory-growth bands unrelated to the physical
  // symmetry-breaking transition.
  EngineConfig scfg = cfg;
  scfg.z2_project = true;
  scfg.init = InitKind::uniform;
  scfg.active_edges = ActiveEdgePolicy::all;
  scfg.max_iters = std::min<decltype(scfg.max_iters)>(scfg.max_iters, 10000);
  // The probe differences out the constant part of any leftover solve
  // residual, so the fixed point does not need to be polished to the
  // engine's default tolerance; a looser solve avoids burning the whole
  // iteration budget on critical slowing near the transition.
  scfg.tol = std::max(scfg.tol, 1e-8);
  EngineConfig pcfg = cfg;
  pcfg.z2_project = false;
  pcfg.damping = kProbeDamping;
  pcfg.schedule = Schedule::jacobi;
  pcfg.active_edges = ActiveEdgePolicy::all;

  Engine probe(rg, fg, beta_lo, pcfg);

  StabilityResult res;
  res.rho_tol = rho_tol;
  res.beta_tol = beta_tol;
  std::vector<double> warm;
  std::unique_ptr<Engine> solver;
  double solver_damping = -1;

  auto eval = [&](double beta) {
    StabilityPoint p;
    p.beta = beta;
    // Every evaluation re-solves from the uniform start: warm-starting
    // across temperatures can land on a different point of the
    // fixed-point manifold with a different spurious-mode spectrum.
    // The symmetric-subspace solve cycles at strong coupling when the
    // damping is too light — the tolerable damping shrinks roughly like
    // 1/(1 + e^{2 beta}) — so start from a coupling-aware value and
    // retry with progressively heavier damping if it still fails.  Each
    // attempt runs in residual-monitored chunks: a solve that has
    // stopped making progress is abandoned early instead of burning the
    // whole iteration budget.
    bool numeric_blowup = false;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const double want = std::min(cfg.damping, 1.6 / (1.0 + std::exp(2.0 * beta))) *
                          std::pow(0.6, attempt);
      if (!solver || solver_damping != want) {
        scfg.damping = solver_damping = want;
        solver = std::make_unique<Engine>(rg, fg, beta, scfg);
      }
      solver->set_beta(beta);
      solver->reset(InitKind::uniform);
      numeric_blowup = false;
      p.fp_converged = false;
      double prev_residual = std::numeric_limits<double>::infinity();
      const long chunk = 2000;
      for (long done = 0; done < scfg.max_iters && !p.fp_converged; done += chunk) {
        try {
          p.fp_converged = [&] {
            for (long i = 0; i < chunk; ++i) {
              solver->sweep();
              if (solver->state().residual < scfg.tol) return true;
            }
            return false;
          }();
        } catch (const NumericRangeError&) {
          numeric_blowup = true;
          break;
        }
        const double r = solver->state().residual;
        if (!p.fp_converged && !(r < 0.5 * prev_residual) && !(r < 1e-4))
          break;  // plateau: this damping will not get there
        prev_residual = r;
      }
      if (p.fp_converged) break;
      // An unconverged but small residual still locates the fixed point
      // to far better accuracy than the probe perturbation needs, and
      // it only happens far from the crossing where classification has
      // plenty of margin.
      if (!numeric_blowup && solver->state().residual < 1e-4) break;
    }
    const bool usable = !numeric_blowup &&
                        (p.fp_converged || solver->state().residual < 1e-4);
    if (!usable) {
      // A symmetric-subspace iteration that cycles without settling at
      // any damping means the paramagnetic solution is no longer
      // numerically attainable — the strongest form of instability.  At
      // the lower bracket endpoint that reading would invalidate the
      // bisection premise, so it stays an error there.
      if (beta <= beta_lo)
        throw ConfigError("paramagnetic solve failed at beta " + std::to_string(beta));
      p.rho = std::numeric_limits<double>::infinity();
      p.rho_converged = false;
      p.fp_iters = solver->state().iteration;
      res.curve.push_back(p);
      return p;
    }
    p.fp_iters = solver->state().iteration;
    probe.set_beta(beta);
    try {
      p.rho = spectral_radius(probe, solver->state(), 1, 2000, 1e-6, &warm, &p.rho_converged);
    } catch (const NumericRangeError&) {
      throw ConfigError("stability probe failed at beta " + std::to_string(beta));
    }
    res.curve.push_back(p);
    return p;
  };

  // The fixed-manifold directions of the redundant parametrization pin
  // the measured radius at exactly 1 on the stable side, so instability
  // is declared only when rho clears 1 by the radius tolerance.
  const auto unstable = [rho_tol](const StabilityPoint& p) { return p.rho > 1.0 + rho_tol; };

  const StabilityPoint plo = eval(beta_lo);
  const StabilityPoint phi = eval(beta_hi);
  if (unstable(plo) || !unstable(phi))
    throw ConfigError("bisection bracket invalid (rho(" + std::to_string(beta_lo) +
                      ")=" + std::to_string(plo.rho) + ", rho(" + std::to_string(beta_hi) +
                      ")=" + std::to_string(phi.rho) + "); widen the scan");
  res.bracketed = true;

  double lo = beta_lo, hi = beta_hi;
  while (hi - lo > beta_tol) {
    const double mid = 0.5 * (lo + hi);
    const StabilityPoint p = eval(mid);
    (unstable(p) ? hi : lo) = mid;
  }
  res.beta_c = 0.5 * (lo + hi);
  return res;
}

EaSweepResult ea3d_sweep(const std::vector<int>& sizes, int instances_per_size,
                         std::uint64_t seed0, EngineConfig cfg, double beta_lo,
                         double beta_hi) {
  EaSweepResult out;
  std::vector<double> xs, ys;  // per-size means against 1/L
  for (int L : sizes) {
    DisorderSweep ds;
    ds.side_length = L;
    for (int k = 0; k < instances_per_size; ++k) {
      const std::uint64_t seed =
          seed0 + 1000ull * static_cast<std::uint64_t>(L) + static_cast<std::uint64_t>(k);
      LatticeSpec spec;
      spec.dim = 3;
      spec.side_length = L;
      spec.coupling_kind = CouplingKind::ea_pm_j;
      spec.uniform_field = 0.0;
      spec.seed = seed;
      const Lattice lat = build_lattice(spec);
      const RegionGraph rg = build_region_graph_3d(lat);
      try {
        // Instance-to-instance scatter of the instability temperature
        // is of order 0.1, so a 1e-2 bisection window is already far
        // below the statistical resolution of the ensemble.
        const StabilityResult r =
            find_beta_c(rg, lat.graph, cfg, beta_lo, beta_hi, 1e-4, 1e-2);
        ds.seeds.push_back(seed);
        ds.beta_c.push_back(r.beta_c);
      } catch (const ConfigError&) {
        ds.failed_seeds.push_back(seed);
      }
    }
    const std::size_t n = ds.beta_c.size();
    if (n > 0) {
      double s = 0;
      for (double b : ds.beta_c) s += b;
      ds.mean = s / static_cast<double>(n);
      double var = 0;
      for (double b : ds.beta_c) var += (b - ds.mean) * (b - ds.mean);
      if (n > 1) ds.std_error = std::sqrt(var / static_cast<double>(n - 1) /
                                          static_cast<double>(n));
      xs.push_back(1.0 / L);
      ys.push_back(ds.mean);
    }
    out.sweeps.push_back(std::move(ds));
  }

  const std::size_t n = xs.size();
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    out.fit.slope = (nn * sxy - sx * sy) / det;
    out.fit.intercept = (sy - out.fit.slope * sx) / nn;
    if (n > 2) {
      double ssr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - out.fit.intercept - out.fit.slope * xs[i];
        ssr += r * r;
      }
      const double s2 = ssr / (nn - 2);
      const double xbar = sx / nn;
      const double sxxc = sxx - nn * xbar * xbar;
      out.fit.slope_stderr = std::sqrt(s2 / sxxc);
      out.fit.intercept_stderr = std::sqrt(s2 * (1.0 / nn + xbar * xbar / sxxc));
    }
  }
  return out;
}

}  // namespace rgbp
