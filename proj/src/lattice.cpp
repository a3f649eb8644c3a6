#include "rgbp/lattice.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace rgbp {

int Lattice::num_sites() const {
  int n = spec.side_length * spec.side_length;
  return spec.dim == 3 ? n * spec.side_length : n;
}

int Lattice::site(int x, int y, int z) const {
  const int L = spec.side_length;
  auto wrap = [L](int v) { return ((v % L) + L) % L; };
  int s = wrap(x) + L * wrap(y);
  if (spec.dim == 3) s += L * L * wrap(z);
  return s;
}

void Lattice::coords(int s, int& x, int& y, int& z) const {
  const int L = spec.side_length;
  x = s % L;
  y = (s / L) % L;
  z = spec.dim == 3 ? s / (L * L) : 0;
}

double Lattice::coupling(int bond_id) const {
  return -graph.interaction(bond_id).energy[0];
}

Lattice build_lattice(const LatticeSpec& spec) {
  if (spec.dim != 2 && spec.dim != 3)
    throw std::invalid_argument("lattice dim must be 2 or 3");
  if (spec.side_length < 3)
    throw std::invalid_argument("lattice side length must be >= 3");
  const int L = spec.side_length;
  const int N = spec.dim == 2 ? L * L : L * L * L;

  std::vector<VertexSpec> vertices;
  vertices.reserve(N);
  for (int i = 0; i < N; ++i) vertices.push_back(make_spin_vertex(i, spec.uniform_field));

  SplitMix64 rng(spec.seed);
  auto draw = [&]() -> double {
    if (spec.coupling_kind == CouplingKind::ferromagnet) return 1.0;
    return (rng.next() >> 63) ? -1.0 : 1.0;
  };

  Lattice lat{spec, FactorGraph({}, {})};
  // Temporary shell just for site() arithmetic before the graph exists.
  std::vector<InteractionSpec> bonds;
  bonds.reserve(spec.dim * N);
  for (int s = 0; s < N; ++s) {
    int x = s % L, y = (s / L) % L, z = s / (L * L);
    auto wrap_site = [&](int xx, int yy, int zz) {
      auto w = [L](int v) { return ((v % L) + L) % L; };
      int r = w(xx) + L * w(yy);
      if (spec.dim == 3) r += L * L * w(zz);
      return r;
    };
    int id = static_cast<int>(bonds.size());
    bonds.push_back(make_pair_coupling(id, s, wrap_site(x + 1, y, z), draw()));
    ++id;
    bonds.push_back(make_pair_coupling(id, s, wrap_site(x, y + 1, z), draw()));
    if (spec.dim == 3) {
      ++id;
      bonds.push_back(make_pair_coupling(id, s, wrap_site(x, y, z + 1), draw()));
    }
  }
  lat.graph = FactorGraph(std::move(vertices), std::move(bonds));
  return lat;
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& s) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) kv[item] = "";
    else kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

}  // namespace

LatticeSpec parse_lattice_spec(const std::string& s) {
  auto kv = parse_kv(s);
  LatticeSpec spec;
  if (kv.count("dim")) spec.dim = std::stoi(kv["dim"]);
  if (kv.count("L")) spec.side_length = std::stoi(kv["L"]);
  if (kv.count("model")) {
    if (kv["model"] == "ferro") spec.coupling_kind = CouplingKind::ferromagnet;
    else if (kv["model"] == "ea") spec.coupling_kind = CouplingKind::ea_pm_j;
    else throw std::invalid_argument("unknown model: " + kv["model"]);
  }
  if (kv.count("seed")) spec.seed = std::stoull(kv["seed"]);
  if (kv.count("h")) spec.uniform_field = std::stod(kv["h"]);
  return spec;
}

RegionLayout parse_region_spec(const std::string& s) {
  auto kv = parse_kv(s);
  RegionLayout layout;
  if (kv.count("family")) {
    if (kv["family"] == "2d") layout.family = RegionLayout::Family::square_rod_vertex_2d;
    else if (kv["family"] == "3d")
      layout.family = RegionLayout::Family::cube_surface_rod_vertex_3d;
    else if (kv["family"] == "bethe") layout.family = RegionLayout::Family::bethe;
    else throw std::invalid_argument("unknown region family: " + kv["family"]);
  }
  if (kv.count("n")) layout.block_size = std::stoi(kv["n"]);
  return layout;
}

namespace {

// Assigns to each region every interaction whose members all lie inside
// its vertex set.
void assign_interactions(std::vector<Region>& regions, const FactorGraph& fg) {
  for (Region& r : regions) {
    std::unordered_set<int> vs(r.vertices.begin(), r.vertices.end());
    std::unordered_set<int> picked;
    for (int v : r.vertices) {
      for (int a : fg.interactions_of(v)) {
        if (picked.count(a)) continue;
        bool inside = true;
        for (int m : fg.interaction(a).members)
          if (!vs.count(m)) {
            inside = false;
            break;
          }
        if (inside) picked.insert(a);
      }
    }
    r.interactions.assign(picked.begin(), picked.end());
    std::sort(r.interactions.begin(), r.interactions.end());
  }
}

}  // namespace

RegionGraph build_region_graph_2d(const Lattice& lat, int n) {
  if (lat.spec.dim != 2) throw std::invalid_argument("2D region graph needs a 2D lattice");
  const int L = lat.spec.side_length;
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("block size n must be even, >= 2");
  if (L % n != 0) throw std::invalid_argument("n must divide L");
  if (L < 2 * n) throw std::invalid_argument("L must be at least 2n");
  const int s = n / 2;  // tiling stride; adjacent squares overlap in a rod
  const int G = L / s;  // grid positions per axis

  auto block = [&](int x0, int y0, int w, int h) {
    std::vector<int> v;
    for (int dy = 0; dy < h; ++dy)
      for (int dx = 0; dx < w; ++dx) v.push_back(lat.site(x0 + dx, y0 + dy));
    return v;
  };

  std::vector<Region> regions;
  auto add = [&](std::vector<int> v) {
    int id = static_cast<int>(regions.size());
    regions.push_back(Region{id, std::move(v), {}, 0});
    return id;
  };

  // Ids laid out level by level: squares, vertical rods, horizontal rods,
  // cells (n/2-squares).
  std::vector<int> square(G * G), vrod(G * G), hrod(G * G), cell(G * G);
  auto gidx = [&](int gx, int gy) { return ((gx % G) + G) % G + G * (((gy % G) + G) % G); };
  for (int gy = 0; gy < G; ++gy)
    for (int gx = 0; gx < G; ++gx) square[gidx(gx, gy)] = add(block(gx * s, gy * s, n, n));
  for (int gy = 0; gy < G; ++gy)
    for (int gx = 0; gx < G; ++gx) vrod[gidx(gx, gy)] = add(block(gx * s, gy * s, s, n));
  for (int gy = 0; gy < G; ++gy)
    for (int gx = 0; gx < G; ++gx) hrod[gidx(gx, gy)] = add(block(gx * s, gy * s, n, s));
  for (int gy = 0; gy < G; ++gy)
    for (int gx = 0; gx < G; ++gx) cell[gidx(gx, gy)] = add(block(gx * s, gy * s, s, s));

  std::vector<RegionEdge> edges;
  for (int gy = 0; gy < G; ++gy)
    for (int gx = 0; gx < G; ++gx) {
      int sq = square[gidx(gx, gy)];
      edges.push_back({sq, vrod[gidx(gx, gy)]});
      edges.push_back({sq, vrod[gidx(gx + 1, gy)]});
      edges.push_back({sq, hrod[gidx(gx, gy)]});
      edges.push_back({sq, hrod[gidx(gx, gy + 1)]});
      edges.push_back({vrod[gidx(gx, gy)], cell[gidx(gx, gy)]});
      edges.push_back({vrod[gidx(gx, gy)], cell[gidx(gx, gy + 1)]});
      edges.push_back({hrod[gidx(gx, gy)], cell[gidx(gx, gy)]});
      edges.push_back({hrod[gidx(gx, gy)], cell[gidx(gx + 1, gy)]});
    }

  assign_interactions(regions, lat.graph);
  return RegionGraph(std::move(regions), std::move(edges));
}

RegionGraph build_region_graph_3d(const Lattice& lat) {
  if (lat.spec.dim != 3) throw std::invalid_argument("3D region graph needs a 3D lattice");
  const int L = lat.spec.side_length;
  const int N = lat.num_sites();

  auto box = [&](int x0, int y0, int z0, int w, int h, int d) {
    std::vector<int> v;
    for (int dz = 0; dz < d; ++dz)
      for (int dy = 0; dy < h; ++dy)
        for (int dx = 0; dx < w; ++dx) v.push_back(lat.site(x0 + dx, y0 + dy, z0 + dz));
    return v;
  };

  std::vector<Region> regions;
  auto add = [&](std::vector<int> v) {
    int id = static_cast<int>(regions.size());
    regions.push_back(Region{id, std::move(v), {}, 0});
    return id;
  };

  // Levels: cubes, surfaces (xy, xz, yz), rods (x, y, z), vertices.
  std::vector<int> cube(N), surf(3 * N), rod(3 * N), vert(N);
  auto sidx = [&](int x, int y, int z) { return lat.site(x, y, z); };
  for (int z = 0; z < L; ++z)
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) cube[sidx(x, y, z)] = add(box(x, y, z, 2, 2, 2));
  for (int o = 0; o < 3; ++o)
    for (int z = 0; z < L; ++z)
      for (int y = 0; y < L; ++y)
        for (int x = 0; x < L; ++x) {
          int w = o == 2 ? 1 : 2, h = o == 1 ? 1 : 2, d = o == 0 ? 1 : 2;
          surf[o * N + sidx(x, y, z)] = add(box(x, y, z, w, h, d));
        }
  for (int o = 0; o < 3; ++o)
    for (int z = 0; z < L; ++z)
      for (int y = 0; y < L; ++y)
        for (int x = 0; x < L; ++x) {
          int w = o == 0 ? 2 : 1, h = o == 1 ? 2 : 1, d = o == 2 ? 2 : 1;
          rod[o * N + sidx(x, y, z)] = add(box(x, y, z, w, h, d));
        }
  for (int s = 0; s < N; ++s) vert[s] = add({s});

  std::vector<RegionEdge> edges;
  for (int z = 0; z < L; ++z)
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) {
        int c = cube[sidx(x, y, z)];
        // orientation 0 = xy plane (normal z), 1 = xz, 2 = yz
        edges.push_back({c, surf[0 * N + sidx(x, y, z)]});
        edges.push_back({c, surf[0 * N + sidx(x, y, z + 1)]});
        edges.push_back({c, surf[1 * N + sidx(x, y, z)]});
        edges.push_back({c, surf[1 * N + sidx(x, y + 1, z)]});
        edges.push_back({c, surf[2 * N + sidx(x, y, z)]});
        edges.push_back({c, surf[2 * N + sidx(x + 1, y, z)]});
      }
  for (int z = 0; z < L; ++z)
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) {
        // xy surface: x-rods at y, y+1; y-rods at x, x+1
        int f = surf[0 * N + sidx(x, y, z)];
        edges.push_back({f, rod[0 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[0 * N + sidx(x, y + 1, z)]});
        edges.push_back({f, rod[1 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[1 * N + sidx(x + 1, y, z)]});
        // xz surface: x-rods at z, z+1; z-rods at x, x+1
        f = surf[1 * N + sidx(x, y, z)];
        edges.push_back({f, rod[0 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[0 * N + sidx(x, y, z + 1)]});
        edges.push_back({f, rod[2 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[2 * N + sidx(x + 1, y, z)]});
        // yz surface: y-rods at z, z+1; z-rods at y, y+1
        f = surf[2 * N + sidx(x, y, z)];
        edges.push_back({f, rod[1 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[1 * N + sidx(x, y, z + 1)]});
        edges.push_back({f, rod[2 * N + sidx(x, y, z)]});
        edges.push_back({f, rod[2 * N + sidx(x, y + 1, z)]});
      }
  for (int z = 0; z < L; ++z)
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) {
        edges.push_back({rod[0 * N + sidx(x, y, z)], vert[sidx(x, y, z)]});
        edges.push_back({rod[0 * N + sidx(x, y, z)], vert[sidx(x + 1, y, z)]});
        edges.push_back({rod[1 * N + sidx(x, y, z)], vert[sidx(x, y, z)]});
        edges.push_back({rod[1 * N + sidx(x, y, z)], vert[sidx(x, y + 1, z)]});
        edges.push_back({rod[2 * N + sidx(x, y, z)], vert[sidx(x, y, z)]});
        edges.push_back({rod[2 * N + sidx(x, y, z)], vert[sidx(x, y, z + 1)]});
      }

  assign_interactions(regions, lat.graph);
  return RegionGraph(std::move(regions), std::move(edges));
}

RegionGraph build_bethe_region_graph(const FactorGraph& fg) {
  std::vector<Region> regions;
  std::vector<RegionEdge> edges;
  for (int a = 0; a < fg.num_interactions(); ++a) {
    std::vector<int> v = fg.interaction(a).members;
    regions.push_back(Region{a, std::move(v), {}, 0});
  }
  const int base = fg.num_interactions();
  for (int i = 0; i < fg.num_vertices(); ++i)
    regions.push_back(Region{base + i, {i}, {}, 0});
  for (int a = 0; a < fg.num_interactions(); ++a)
    for (int m : fg.interaction(a).members) edges.push_back({a, base + m});
  assign_interactions(regions, fg);
  return RegionGraph(std::move(regions), std::move(edges));
}

RegionGraph build_region_graph(const Lattice& lat, const RegionLayout& layout) {
  switch (layout.family) {
    case RegionLayout::Family::square_rod_vertex_2d:
      return build_region_graph_2d(lat, layout.block_size);
    case RegionLayout::Family::cube_surface_rod_vertex_3d:
      if (layout.block_size != 2)
        throw std::invalid_argument("3D region family supports n=2 only");
      return build_region_graph_3d(lat);
    case RegionLayout::Family::bethe:
      return build_bethe_region_graph(lat.graph);
  }
  throw std::invalid_argument("unknown region layout");
}

void save_instance(std::ostream& os, const Lattice& lat) {
  os << lat.spec.dim << " " << lat.spec.side_length << " " << lat.spec.seed << "\n";
  os << "# rng splitmix64\n";
  char buf[64];
  for (int a = 0; a < lat.graph.num_interactions(); ++a) {
    const InteractionSpec& t = lat.graph.interaction(a);
    std::snprintf(buf, sizeof(buf), "%.17g", lat.coupling(a));
    os << "J " << t.members[0] << " " << t.members[1] << " " << buf << "\n";
  }
  for (int i = 0; i < lat.graph.num_vertices(); ++i) {
    double h = -lat.graph.vertex(i).self_energy[1];  // E(+1) = -h
    if (h != 0.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", h);
      os << "h " << i << " " << buf << "\n";
    }
  }
}

Lattice load_instance(std::istream& is) {
  LatticeSpec spec;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty instance file");
  {
    std::istringstream hs(line);
    if (!(hs >> spec.dim >> spec.side_length >> spec.seed))
      throw std::runtime_error("bad instance header, expected: dim L seed");
  }
  spec.coupling_kind = CouplingKind::ea_pm_j;  // couplings come from the file
  Lattice lat = build_lattice(spec);

  std::map<std::pair<int, int>, int> bond_of;
  for (int a = 0; a < lat.graph.num_interactions(); ++a) {
    const auto& m = lat.graph.interaction(a).members;
    bond_of[{std::min(m[0], m[1]), std::max(m[0], m[1])}] = a;
  }
  std::vector<VertexSpec> vertices = lat.graph.vertices();
  std::vector<InteractionSpec> bonds = lat.graph.interactions();
  bool all_plus = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    char kind;
    ls >> kind;
    if (kind == 'J') {
      int i, j;
      double v;
      if (!(ls >> i >> j >> v)) throw std::runtime_error("bad J line: " + line);
      auto it = bond_of.find({std::min(i, j), std::max(i, j)});
      if (it == bond_of.end()) throw std::runtime_error("J line is not a lattice bond: " + line);
      const auto& m = bonds[it->second].members;
      bonds[it->second] = make_pair_coupling(it->second, m[0], m[1], v);
      if (v != 1.0) all_plus = false;
    } else if (kind == 'h') {
      int i;
      double v;
      if (!(ls >> i >> v)) throw std::runtime_error("bad h line: " + line);
      vertices.at(i) = make_spin_vertex(i, v);
    } else {
      throw std::runtime_error("unrecognized instance line: " + line);
    }
  }
  lat.spec.coupling_kind = all_plus ? CouplingKind::ferromagnet : CouplingKind::ea_pm_j;
  lat.graph = FactorGraph(std::move(vertices), std::move(bonds));
  return lat;
}

}  // namespace rgbp
