#include <doctest.h>

#include <cmath>
#include <vector>

#include <rgbp/lattice.hpp>
#include <rgbp/stability.hpp>

using namespace rgbp;

TEST_SUITE_BEGIN("stability");

static Lattice ferro2d(int L, double h = 0.0) {
  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = L;
  ls.uniform_field = h;
  return build_lattice(ls);
}

TEST_CASE("symmetric fixed point exists above the transition and has zero moments") {
  Lattice lat = ferro2d(8);
  RegionGraph rg = build_region_graph_2d(lat, 2);
  EngineConfig cfg;
  cfg.damping = 0.5;
  // well above the instability point of the unprojected iteration
  MessageState s = paramagnetic_fixed_point(rg, lat.graph, 0.45, cfg);
  CHECK(s.residual < cfg.tol);
  for (const auto& t : s.tables) {
    double sum = 0;
    for (double x : t) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (size_t i = 0; i < t.size(); ++i)
      CHECK(t[i] == doctest::Approx(t[t.size() - 1 - i]).epsilon(1e-11));
  }
}

TEST_CASE("symmetric solve requires zero field") {
  Lattice lat = ferro2d(4, 0.1);
  RegionGraph rg = build_region_graph_2d(lat, 2);
  EngineConfig cfg;
  CHECK_THROWS_AS(paramagnetic_fixed_point(rg, lat.graph, 0.3, cfg), ConfigError);
}

TEST_CASE("pair-level linearization brackets the known instability") {
  Lattice lat = ferro2d(8);
  RegionGraph rg = build_bethe_region_graph(lat.graph);
  EngineConfig cfg;
  cfg.damping = 0.5;
  // the pair-level map destabilizes at atanh(1/3) ~= 0.3466
  MessageState lo = paramagnetic_fixed_point(rg, lat.graph, 0.30, cfg);
  CHECK(spectral_radius(rg, lat.graph, lo, 0.30, cfg) < 1.0 + 1e-3);
  MessageState hi = paramagnetic_fixed_point(rg, lat.graph, 0.40, cfg);
  CHECK(spectral_radius(rg, lat.graph, hi, 0.40, cfg) > 1.0 + 1e-3);
}

TEST_CASE("bisection finds the pair-level instability point") {
  Lattice lat = ferro2d(8);
  RegionGraph rg = build_bethe_region_graph(lat.graph);
  EngineConfig cfg;
  StabilityResult r = find_beta_c(rg, lat.graph, cfg, 0.30, 0.50);
  CHECK(r.bracketed);
  CHECK(std::abs(r.beta_c - std::atanh(1.0 / 3.0)) < 5e-4);
  CHECK(!r.curve.empty());
  for (const StabilityPoint& p : r.curve) {
    CHECK(std::isfinite(p.rho));
    CHECK(p.fp_converged);
  }

  // start-seed invariance of the detected point
  EngineConfig cfg2;
  cfg2.seed = 1234;
  StabilityResult r2 = find_beta_c(rg, lat.graph, cfg2, 0.30, 0.50);
  CHECK(std::abs(r2.beta_c - r.beta_c) <= 2 * r.beta_tol + 1e-12);
}

TEST_CASE("an invalid bracket is rejected with an error") {
  Lattice lat = ferro2d(8);
  RegionGraph rg = build_bethe_region_graph(lat.graph);
  EngineConfig cfg;
  CHECK_THROWS_AS(find_beta_c(rg, lat.graph, cfg, 0.05, 0.15), ConfigError);
}

TEST_SUITE_END();
