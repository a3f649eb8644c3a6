#include "rgbp/region_graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace rgbp {

namespace {

bool sorted_contains(const std::vector<int>& v, int x) {
  return std::binary_search(v.begin(), v.end(), x);
}

bool sorted_subset(const std::vector<int>& sub, const std::vector<int>& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

bool sorted_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else return false;
  }
  return true;
}

}  // namespace

std::vector<ValidationReport::Entry> ValidationReport::failures() const {
  std::vector<Entry> out;
  for (const Entry& e : entries)
    if (e.counting_sum != 1 || !e.connected) out.push_back(e);
  return out;
}

RegionGraph::RegionGraph(std::vector<Region> regions, std::vector<RegionEdge> edges)
    : regions_(std::move(regions)), edges_(std::move(edges)) {
  const int R = num_regions();
  for (int r = 0; r < R; ++r) {
    Region& g = regions_[r];
    if (g.id != r) throw StructureError("region ids must be dense, 0..R-1");
    std::sort(g.vertices.begin(), g.vertices.end());
    std::sort(g.interactions.begin(), g.interactions.end());
    if (g.vertices.empty()) throw StructureError("region with empty vertex set");
    if (std::adjacent_find(g.vertices.begin(), g.vertices.end()) != g.vertices.end())
      throw StructureError("duplicate vertex in region");
    if (!g.vertices.empty()) num_vertices_ = std::max(num_vertices_, g.vertices.back() + 1);
    if (!g.interactions.empty())
      num_interactions_ = std::max(num_interactions_, g.interactions.back() + 1);
  }

  // Two regions with identical vertex sets would make ancestor reachability
  // ill-defined under the containment rule; rejected outright.
  {
    std::map<std::vector<int>, int> seen;
    for (const Region& g : regions_)
      if (!seen.emplace(g.vertices, g.id).second)
        throw StructureError("two regions share the vertex set (region " +
                             std::to_string(g.id) + ")");
  }

  parents_.resize(R);
  children_.resize(R);
  out_edges_.resize(R);
  in_edges_.resize(R);
  for (int e = 0; e < num_edges(); ++e) {
    const RegionEdge& ed = edges_[e];
    if (ed.parent < 0 || ed.parent >= R || ed.child < 0 || ed.child >= R)
      throw StructureError("edge endpoint out of range");
    const Region& p = regions_[ed.parent];
    const Region& c = regions_[ed.child];
    if (!sorted_subset(c.vertices, p.vertices))
      throw StructureError("child vertex set not contained in parent");
    if (!sorted_subset(c.interactions, p.interactions))
      throw StructureError("child interaction set not contained in parent");
    parents_[ed.child].push_back(ed.parent);
    children_[ed.parent].push_back(ed.child);
    out_edges_[ed.parent].push_back(e);
    in_edges_[ed.child].push_back(e);
  }

  // Kahn topological sort; containment plus distinct vertex sets already
  // forbids cycles, but check anyway.
  {
    std::vector<int> indeg(R, 0);
    for (const RegionEdge& ed : edges_) ++indeg[ed.child];
    std::priority_queue<int, std::vector<int>, std::greater<>> q;
    for (int r = 0; r < R; ++r)
      if (indeg[r] == 0) q.push(r);
    while (!q.empty()) {
      int r = q.top();
      q.pop();
      topo_.push_back(r);
      for (int c : children_[r])
        if (--indeg[c] == 0) q.push(c);
    }
    if (static_cast<int>(topo_.size()) != R)
      throw StructureError("cycle detected in region graph");
  }

  depth_.assign(R, 0);
  for (int r : topo_)
    for (int c : children_[r]) depth_[c] = std::max(depth_[c], depth_[r] + 1);

  // Ancestor sets in topological order, then counting numbers by the
  // one-minus-ancestor-sum recursion.
  ancestors_.resize(R);
  for (int r : topo_) {
    std::vector<int> acc;
    for (int p : parents_[r]) {
      acc.push_back(p);
      acc.insert(acc.end(), ancestors_[p].begin(), ancestors_[p].end());
    }
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    ancestors_[r] = std::move(acc);
  }
  for (int r : topo_) {
    int c = 1;
    for (int a : ancestors_[r]) c -= regions_[a].counting_number;
    regions_[r].counting_number = c;
  }

  // Interiors in reverse topological order.
  interior_.resize(R);
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    int r = *it;
    std::vector<int> acc{r};
    for (int c : children_[r])
      acc.insert(acc.end(), interior_[c].begin(), interior_[c].end());
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    interior_[r] = std::move(acc);
  }

  boundary_.resize(R);
  for (int r = 0; r < R; ++r) {
    std::vector<int> acc;
    for (int m : interior_[r])
      for (int p : parents_[m])
        if (!sorted_contains(interior_[r], p)) acc.push_back(p);
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    boundary_[r] = std::move(acc);
  }

  by_vertex_.resize(num_vertices_);
  by_interaction_.resize(num_interactions_);
  for (const Region& g : regions_) {
    for (int v : g.vertices) by_vertex_[v].push_back(g.id);
    for (int a : g.interactions) by_interaction_[a].push_back(g.id);
  }
}

bool RegionGraph::in_interior(int gamma, int alpha) const {
  return sorted_contains(interior_.at(alpha), gamma);
}

bool RegionGraph::contains_vertex(int r, int v) const {
  return sorted_contains(regions_.at(r).vertices, v);
}

const std::vector<int>& RegionGraph::regions_with_vertex(int v) const {
  return by_vertex_.at(v);
}

const std::vector<int>& RegionGraph::regions_with_interaction(int a) const {
  return by_interaction_.at(a);
}

int RegionGraph::find_edge(int parent, int child) const {
  for (int e : out_edges_.at(parent))
    if (edges_[e].child == child) return e;
  return -1;
}

std::string RegionGraph::dump() const {
  std::ostringstream os;
  for (const Region& g : regions_) {
    os << "R " << g.id << " " << g.counting_number << " v:";
    for (std::size_t k = 0; k < g.vertices.size(); ++k)
      os << (k ? "," : "") << g.vertices[k];
    os << " a:";
    for (std::size_t k = 0; k < g.interactions.size(); ++k)
      os << (k ? "," : "") << g.interactions[k];
    os << "\n";
  }
  for (const RegionEdge& e : edges_) os << "E " << e.parent << " " << e.child << "\n";
  return os.str();
}

std::vector<int> recompute_counting_numbers(const RegionGraph& rg,
                                            const std::vector<int>& topo_order) {
  const int R = rg.num_regions();
  if (static_cast<int>(topo_order.size()) != R)
    throw StructureError("topological order must cover all regions");
  std::vector<int> c(R, 0);
  std::vector<char> done(R, 0);
  for (int r : topo_order) {
    for (int p : rg.parents(r))
      if (!done[p]) throw StructureError("order is not topological");
    int v = 1;
    for (int a : rg.ancestors(r)) v -= c[a];
    c[r] = v;
    done[r] = 1;
  }
  return c;
}

namespace {

// Connectivity of an induced node set, treating directed edges as
// undirected.
bool induced_connected(const RegionGraph& rg, const std::vector<int>& nodes) {
  if (nodes.empty()) return false;
  std::vector<char> in_set_flag;
  std::unordered_map<int, int> pos;
  pos.reserve(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) pos[nodes[k]] = static_cast<int>(k);
  std::vector<char> seen(nodes.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    int k = stack.back();
    stack.pop_back();
    int r = nodes[k];
    auto visit = [&](int other) {
      auto it = pos.find(other);
      if (it != pos.end() && !seen[it->second]) {
        seen[it->second] = 1;
        ++visited;
        stack.push_back(it->second);
      }
    };
    for (int p : rg.parents(r)) visit(p);
    for (int c : rg.children(r)) visit(c);
  }
  return visited == nodes.size();
}

// Looks for two distinct directed paths from `src` to any other region,
// restricted to `nodes`; returns the two paths if found.
std::optional<std::pair<std::vector<int>, std::vector<int>>> two_paths_from(
    const RegionGraph& rg, int src, const std::vector<int>& nodes) {
  // Up to two distinct arrival paths per node.
  std::unordered_map<int, std::vector<std::vector<int>>> paths;
  paths[src] = {{src}};
  // Process in topological order restricted to nodes reachable from src.
  for (int r : rg.topological_order()) {
    auto it = paths.find(r);
    if (it == paths.end()) continue;
    if (it->second.size() >= 2)
      return std::make_pair(it->second[0], it->second[1]);
    for (int c : rg.children(r)) {
      if (!sorted_contains(nodes, c)) continue;
      auto& dst = paths[c];
      for (const auto& p : it->second) {
        if (dst.size() >= 2) break;
        std::vector<int> np = p;
        np.push_back(c);
        dst.push_back(std::move(np));
      }
    }
  }
  for (auto& [r, ps] : paths)
    if (ps.size() >= 2) return std::make_pair(ps[0], ps[1]);
  return std::nullopt;
}

}  // namespace

ValidationReport validate(const RegionGraph& rg, const FactorGraph& fg) {
  ValidationReport rep;
  rep.pass = true;
  auto add = [&](bool is_vertex, int id, const std::vector<int>& nodes) {
    ValidationReport::Entry e;
    e.is_vertex = is_vertex;
    e.id = id;
    for (int r : nodes) e.counting_sum += rg.region(r).counting_number;
    e.connected = induced_connected(rg, nodes);
    if (e.counting_sum != 1 || !e.connected) rep.pass = false;
    rep.entries.push_back(e);
  };
  for (int i = 0; i < fg.num_vertices(); ++i) add(true, i, rg.regions_with_vertex(i));
  for (int a = 0; a < fg.num_interactions(); ++a)
    add(false, a, rg.regions_with_interaction(a));
  return rep;
}

std::vector<EdgeClassification> check_edge_identities(const RegionGraph& rg) {
  std::vector<EdgeClassification> out(rg.num_edges());
  for (int e = 0; e < rg.num_edges(); ++e) out[e].edge = e;

  for (int alpha = 0; alpha < rg.num_regions(); ++alpha) {
    const int c = rg.region(alpha).counting_number;
    for (int mu : rg.boundary(alpha)) {
      const bool no_boundary_ancestor =
          sorted_disjoint(rg.ancestors(mu), rg.boundary(alpha));
      for (int e : rg.out_edges(mu)) {
        if (!rg.in_interior(rg.edge(e).child, alpha)) continue;
        out[e].full_sum += c;
        if (no_boundary_ancestor) out[e].ideal_sum += c;
      }
    }
  }

  for (int e = 0; e < rg.num_edges(); ++e) {
    if (out[e].full_sum != 0)
      throw StructureError("receiving-set counting sum nonzero on edge " +
                           std::to_string(e));
    out[e].ideal = (out[e].ideal_sum == 0);
    if (!out[e].ideal) {
      // Make the failure actionable: some ancestor of the parent reaches
      // the interior by two paths.
      const RegionEdge& ed = rg.edge(e);
      for (int anc : rg.ancestors(ed.parent)) {
        auto w = two_paths_from(rg, anc, rg.interior(anc));
        if (w) {
          out[e].redundant_witness = w;
          break;
        }
      }
    }
  }
  return out;
}

bool is_ideal(const RegionGraph& rg) {
  for (const EdgeClassification& ec : check_edge_identities(rg))
    if (!ec.ideal) return false;
  return true;
}

std::optional<std::pair<std::vector<int>, std::vector<int>>> redundancy_witness(
    const RegionGraph& rg) {
  // Scan every vertex-induced subgraph for a pair of directed paths with
  // common endpoints.
  for (int i = 0; i < rg.num_graph_vertices(); ++i) {
    const std::vector<int>& nodes = rg.regions_with_vertex(i);
    if (nodes.size() < 3) continue;
    for (int src : nodes) {
      auto w = two_paths_from(rg, src, nodes);
      if (w) return w;
    }
  }
  return std::nullopt;
}

RedundancyClass redundancy_class(const RegionGraph& rg) {
  // Tree test per induced subgraph: a connected undirected graph is a
  // tree iff edges == nodes - 1; count induced edges directly.
  for (int i = 0; i < rg.num_graph_vertices(); ++i) {
    const std::vector<int>& nodes = rg.regions_with_vertex(i);
    if (nodes.empty()) continue;
    std::size_t induced_edges = 0;
    for (int r : nodes)
      for (int c : rg.children(r))
        if (sorted_contains(nodes, c)) ++induced_edges;
    std::size_t components = 0;
    {
      std::vector<char> seen(nodes.size(), 0);
      std::unordered_map<int, int> pos;
      for (std::size_t k = 0; k < nodes.size(); ++k) pos[nodes[k]] = static_cast<int>(k);
      for (std::size_t k0 = 0; k0 < nodes.size(); ++k0) {
        if (seen[k0]) continue;
        ++components;
        std::vector<int> stack{static_cast<int>(k0)};
        seen[k0] = 1;
        while (!stack.empty()) {
          int k = stack.back();
          stack.pop_back();
          int r = nodes[k];
          auto visit = [&](int other) {
            auto it = pos.find(other);
            if (it != pos.end() && !seen[it->second]) {
              seen[it->second] = 1;
              stack.push_back(it->second);
            }
          };
          for (int p : rg.parents(r)) visit(p);
          for (int c : rg.children(r)) visit(c);
        }
      }
    }
    if (induced_edges + components > nodes.size())
      return RedundancyClass::redundant;
  }
  return RedundancyClass::non_redundant;
}

}  // namespace rgbp
