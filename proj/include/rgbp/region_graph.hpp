#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rgbp/factor_graph.hpp"

namespace rgbp {

struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Region {
  int id = -1;
  std::vector<int> vertices;      // sorted vertex ids
  std::vector<int> interactions;  // sorted interaction ids
  int counting_number = 0;        // exact integer
};

struct RegionEdge {
  int parent = -1;
  int child = -1;
};

// Counting-number sums over the receiving set of one directed edge.
struct EdgeClassification {
  int edge = -1;
  int full_sum = 0;        // sum of c_alpha over the receiving set, must be 0
  int ideal_sum = 0;       // same with the no-boundary-ancestor restriction
  bool ideal = false;      // ideal_sum == 0
  // Two distinct directed region paths sharing endpoints, when the edge
  // closes a loop in some induced subgraph.
  std::optional<std::pair<std::vector<int>, std::vector<int>>> redundant_witness;
};

enum class RedundancyClass { non_redundant, redundant };

struct ValidationReport {
  struct Entry {
    bool is_vertex = true;  // else interaction
    int id = -1;
    int counting_sum = 0;
    bool connected = false;
  };
  std::vector<Entry> entries;
  bool pass = false;
  std::vector<Entry> failures() const;
};

// Directed acyclic graph of regions.  Immutable once constructed: the
// constructor checks containment along every edge, rejects duplicate
// vertex sets and cycles, computes counting numbers in
// topological order and fills the interior/ancestor/boundary caches.
class RegionGraph {
 public:
  RegionGraph(std::vector<Region> regions, std::vector<RegionEdge> edges);

  int num_regions() const { return static_cast<int>(regions_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const Region& region(int r) const { return regions_.at(r); }
  const RegionEdge& edge(int e) const { return edges_.at(e); }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<RegionEdge>& edges() const { return edges_; }

  const std::vector<int>& parents(int r) const { return parents_.at(r); }
  const std::vector<int>& children(int r) const { return children_.at(r); }
  const std::vector<int>& out_edges(int r) const { return out_edges_.at(r); }
  const std::vector<int>& in_edges(int r) const { return in_edges_.at(r); }

  // I_alpha: alpha and all descendants; A_alpha: strict ancestors;
  // B_alpha: regions outside I_alpha parental to at least one member of
  // I_alpha.  All sorted by region id.
  const std::vector<int>& interior(int r) const { return interior_.at(r); }
  const std::vector<int>& ancestors(int r) const { return ancestors_.at(r); }
  const std::vector<int>& boundary(int r) const { return boundary_.at(r); }

  bool in_interior(int gamma, int alpha) const;  // gamma <= alpha
  bool contains_vertex(int r, int v) const;

  // Highest vertex / interaction id mentioned by any region, plus one.
  int num_graph_vertices() const { return num_vertices_; }
  int num_graph_interactions() const { return num_interactions_; }

  // Nodes of the induced subgraph R_i (regions containing vertex i),
  // and R_a for interaction a.  Sorted by region id.
  const std::vector<int>& regions_with_vertex(int v) const;
  const std::vector<int>& regions_with_interaction(int a) const;

  // Regions in topological order, parents before children.
  const std::vector<int>& topological_order() const { return topo_; }
  int depth(int r) const { return depth_.at(r); }  // longest path from a root

  int find_edge(int parent, int child) const;  // -1 if absent

  // Text dump: "R id c v:<ids> a:<ids>" per region, "E parent child"
  // per edge.
  std::string dump() const;

 private:
  std::vector<Region> regions_;
  std::vector<RegionEdge> edges_;
  std::vector<std::vector<int>> parents_, children_, out_edges_, in_edges_;
  std::vector<std::vector<int>> interior_, ancestors_, boundary_;
  std::vector<std::vector<int>> by_vertex_, by_interaction_;
  std::vector<int> topo_, depth_;
  int num_vertices_ = 0, num_interactions_ = 0;
};

// Standalone recursion used by property tests: recompute counting
// numbers in the given topological order and return them (the graph's own
// numbers are fixed at construction).
std::vector<int> recompute_counting_numbers(const RegionGraph& rg,
                                            const std::vector<int>& topo_order);

// Per-vertex / per-interaction counting sums and connectivity checks
// against a factor graph.
ValidationReport validate(const RegionGraph& rg, const FactorGraph& fg);

// Receiving-set counting sums on every edge, full and
// ancestor-restricted.  Throws StructureError if the full sum is
// nonzero anywhere.
std::vector<EdgeClassification> check_edge_identities(const RegionGraph& rg);

bool is_ideal(const RegionGraph& rg);

// Non-redundant iff every R_i is a tree in the undirected sense.  A
// witness pair of directed paths is recorded for redundant graphs.
RedundancyClass redundancy_class(const RegionGraph& rg);
std::optional<std::pair<std::vector<int>, std::vector<int>>> redundancy_witness(
    const RegionGraph& rg);

}  // namespace rgbp
