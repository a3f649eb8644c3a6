#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "rgbp/factor_graph.hpp"
#include "rgbp/region_graph.hpp"

namespace rgbp {

// splitmix64: the documented disorder generator, trivially reproducible
// in any language.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

enum class CouplingKind { ferromagnet, ea_pm_j };

struct LatticeSpec {
  int dim = 2;                 // 2 or 3
  int side_length = 4;         // L >= 3
  CouplingKind coupling_kind = CouplingKind::ferromagnet;
  double uniform_field = 0.0;  // h0 on every vertex
  std::uint64_t seed = 0;      // disorder seed (ea_pm_j)
};

// A torus lattice spin model plus the site/bond indexing the region
// builders rely on.  Sites are x + L*y (+ L*L*z); each site owns `dim`
// bonds in the +x, +y (, +z) directions, interaction id = dim*site + d.
struct Lattice {
  LatticeSpec spec;
  FactorGraph graph;

  int num_sites() const;
  int site(int x, int y, int z = 0) const;
  int bond(int s, int d) const { return spec.dim * s + d; }
  void coords(int s, int& x, int& y, int& z) const;
  double coupling(int bond_id) const;
};

Lattice build_lattice(const LatticeSpec& spec);

// `dim=2,L=64,model=ea,seed=12345[,h=0.1]` -> LatticeSpec.
LatticeSpec parse_lattice_spec(const std::string& s);

struct RegionLayout {
  enum class Family { square_rod_vertex_2d, cube_surface_rod_vertex_3d, bethe };
  Family family = Family::square_rod_vertex_2d;
  int block_size = 2;  // 2D: even n dividing L; 3D: n = 2 only
};

// `family=2d,n=4` / `family=3d,n=2` / `family=bethe` -> RegionLayout.
RegionLayout parse_region_spec(const std::string& s);

// Overlapping n-by-n squares (stride n/2) -> rods -> n/2-square child
// regions; n = 2 gives the square/rod/vertex graph, n = 4 the
// square/rod/plaquette one.
RegionGraph build_region_graph_2d(const Lattice& lat, int n);

// 2x2x2 cubes -> 2x2 surfaces -> rods -> vertices on a 3D torus.
RegionGraph build_region_graph_3d(const Lattice& lat);

// Pair regions (bond + its two vertices) over single-vertex regions;
// message passing on it is conventional BP.  Works for any pairwise
// factor graph, not just lattices.
RegionGraph build_bethe_region_graph(const FactorGraph& fg);

RegionGraph build_region_graph(const Lattice& lat, const RegionLayout& layout);

// Instance file: "dim L seed" header, "J i j value" couplings,
// "h i value" fields.  Exact decimal round trip for +-1 couplings.
void save_instance(std::ostream& os, const Lattice& lat);
Lattice load_instance(std::istream& is);

}  // namespace rgbp
