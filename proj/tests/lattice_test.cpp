#include <doctest.h>

#include <cmath>
#include <sstream>

#include <rgbp/lattice.hpp>

using namespace rgbp;

TEST_SUITE_BEGIN("lattice");

TEST_CASE("2d torus shape, indexing and coordinates round trip") {
  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = 4;
  Lattice lat = build_lattice(ls);
  CHECK(lat.num_sites() == 16);
  CHECK(lat.graph.num_vertices() == 16);
  CHECK(lat.graph.num_interactions() == 32);  // 2 bonds per site

  for (int s = 0; s < lat.num_sites(); ++s) {
    int x, y, z;
    lat.coords(s, x, y, z);
    CHECK(lat.site(x, y) == s);
    CHECK(z == 0);
  }
  CHECK(lat.site(1, 2) == 1 + 4 * 2);
  CHECK(lat.bond(5, 1) == 2 * 5 + 1);
}

TEST_CASE("bonds join each site to its +x/+y neighbours with wraparound") {
  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = 4;
  Lattice lat = build_lattice(ls);
  // site (3, 2): +x neighbour wraps to (0, 2)
  int s = lat.site(3, 2);
  const InteractionSpec& bx = lat.graph.interaction(lat.bond(s, 0));
  CHECK(((bx.members[0] == s && bx.members[1] == lat.site(0, 2)) ||
         (bx.members[1] == s && bx.members[0] == lat.site(0, 2))));
  const InteractionSpec& by = lat.graph.interaction(lat.bond(s, 1));
  CHECK(((by.members[0] == s && by.members[1] == lat.site(3, 3)) ||
         (by.members[1] == s && by.members[0] == lat.site(3, 3))));
}

TEST_CASE("3d torus shape") {
  LatticeSpec ls;
  ls.dim = 3;
  ls.side_length = 4;
  Lattice lat = build_lattice(ls);
  CHECK(lat.num_sites() == 64);
  CHECK(lat.graph.num_interactions() == 3 * 64);
  int x, y, z;
  lat.coords(lat.site(1, 2, 3), x, y, z);
  CHECK(x == 1);
  CHECK(y == 2);
  CHECK(z == 3);
}

TEST_CASE("ferromagnet couplings are +1 and fields propagate") {
  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = 4;
  ls.uniform_field = 0.25;
  Lattice lat = build_lattice(ls);
  for (int b = 0; b < lat.graph.num_interactions(); ++b)
    CHECK(lat.coupling(b) == doctest::Approx(1.0));
  for (const VertexSpec& v : lat.graph.vertices())
    CHECK(v.self_energy[1] == doctest::Approx(-0.25));
}

TEST_CASE("pm-j disorder is deterministic, +-1 valued and balanced") {
  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = 64;
  ls.coupling_kind = CouplingKind::ea_pm_j;
  ls.seed = 12345;
  Lattice a = build_lattice(ls);
  Lattice b = build_lattice(ls);
  int n = a.graph.num_interactions();
  int plus = 0;
  for (int i = 0; i < n; ++i) {
    double J = a.coupling(i);
    CHECK(std::abs(J) == doctest::Approx(1.0));
    CHECK(b.coupling(i) == J);  // same seed, same instance
    if (J > 0) ++plus;
  }
  // binomial(n, 1/2): |fraction - 1/2| < 3 sigma
  double frac = double(plus) / n;
  CHECK(std::abs(frac - 0.5) < 3.0 * 0.5 / std::sqrt(double(n)));

  ls.seed = 54321;
  Lattice c = build_lattice(ls);
  int diff = 0;
  for (int i = 0; i < n; ++i)
    if (c.coupling(i) != a.coupling(i)) ++diff;
  CHECK(diff > 0);
}

TEST_CASE("lattice spec parsing") {
  LatticeSpec ls = parse_lattice_spec("dim=2,L=64,model=ea,seed=12345");
  CHECK(ls.dim == 2);
  CHECK(ls.side_length == 64);
  CHECK(ls.coupling_kind == CouplingKind::ea_pm_j);
  CHECK(ls.seed == 12345);
  CHECK(ls.uniform_field == doctest::Approx(0.0));

  LatticeSpec f = parse_lattice_spec("dim=3,L=8,model=ferro,h=0.1");
  CHECK(f.dim == 3);
  CHECK(f.coupling_kind == CouplingKind::ferromagnet);
  CHECK(f.uniform_field == doctest::Approx(0.1));

  CHECK_THROWS(parse_lattice_spec("dim=2,L=4,model=banana"));
  CHECK_THROWS(build_lattice(parse_lattice_spec("dim=5,L=4,model=ferro")));
}

TEST_CASE("region spec parsing and dispatch") {
  RegionLayout r2 = parse_region_spec("family=2d,n=4");
  CHECK(r2.family == RegionLayout::Family::square_rod_vertex_2d);
  CHECK(r2.block_size == 4);
  RegionLayout r3 = parse_region_spec("family=3d,n=2");
  CHECK(r3.family == RegionLayout::Family::cube_surface_rod_vertex_3d);
  RegionLayout rb = parse_region_spec("family=bethe");
  CHECK(rb.family == RegionLayout::Family::bethe);
  CHECK_THROWS(parse_region_spec("family=4d"));

  LatticeSpec ls;
  ls.dim = 2;
  ls.side_length = 8;
  Lattice lat = build_lattice(ls);
  RegionGraph rg = build_region_graph(lat, r2);
  CHECK(rg.num_regions() > 0);
}

TEST_CASE("instance files round trip exactly") {
  LatticeSpec ls;
  ls.dim = 3;
  ls.side_length = 4;
  ls.coupling_kind = CouplingKind::ea_pm_j;
  ls.seed = 99;
  Lattice lat = build_lattice(ls);
  std::stringstream ss;
  save_instance(ss, lat);
  Lattice back = load_instance(ss);
  REQUIRE(back.num_sites() == lat.num_sites());
  REQUIRE(back.graph.num_interactions() == lat.graph.num_interactions());
  for (int b = 0; b < lat.graph.num_interactions(); ++b)
    CHECK(back.coupling(b) == lat.coupling(b));
}

TEST_CASE("splitmix64 reference values") {
  // first outputs for seed 0 of the published splitmix64 algorithm
  SplitMix64 g(0);
  CHECK(g.next() == 0xe220a8397b1dcdafULL);
  CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
  double d = SplitMix64(1).next_double();
  CHECK(d >= 0.0);
  CHECK(d < 1.0);
}

TEST_SUITE_END();
