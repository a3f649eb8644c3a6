#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgbp {

// State of a vertex: an index into its alphabet, 0 <= s < q.
// Spin models use q = 2 with index 0 -> spin -1, index 1 -> spin +1.
using State = int;

inline double spin_value(State s) { return s == 0 ? -1.0 : +1.0; }

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VertexSpec {
  int id = -1;
  int alphabet_size = 2;
  std::vector<double> self_energy;  // one entry per state
};

// A many-body interaction over an ordered list of member vertices.
// The energy table is indexed in mixed radix with members[0] the
// fastest-varying digit.
struct InteractionSpec {
  int id = -1;
  std::vector<int> members;
  std::vector<double> energy;
};

class FactorGraph {
 public:
  FactorGraph(std::vector<VertexSpec> vertices,
              std::vector<InteractionSpec> interactions);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_interactions() const { return static_cast<int>(interactions_.size()); }
  const VertexSpec& vertex(int i) const { return vertices_.at(i); }
  const InteractionSpec& interaction(int a) const { return interactions_.at(a); }
  const std::vector<VertexSpec>& vertices() const { return vertices_; }
  const std::vector<InteractionSpec>& interactions() const { return interactions_; }

  // Interactions containing vertex i.
  const std::vector<int>& interactions_of(int i) const { return vertex_interactions_.at(i); }

  // Energy of a full configuration (one state per vertex).
  double total_energy(std::span<const State> config) const;

  // Energy of interaction a evaluated on a full configuration.
  double interaction_energy(int a, std::span<const State> config) const;

  bool all_binary() const;

 private:
  std::vector<VertexSpec> vertices_;
  std::vector<InteractionSpec> interactions_;
  std::vector<std::vector<int>> vertex_interactions_;
};

// exp(-beta * E) for a self-energy term.
double boltzmann_factor(const VertexSpec& v, State s, double beta);

// exp(-beta * E) for an interaction; sub is the states of the members
// in member order.
double boltzmann_factor(const InteractionSpec& a, const FactorGraph& g,
                        std::span<const State> sub, double beta);

// Convenience constructors for pairwise spin models:
// self energy -h0*x_i and pair energy -J*x_i*x_j.
VertexSpec make_spin_vertex(int id, double h0);
InteractionSpec make_pair_coupling(int id, int i, int j, double J);

}  // namespace rgbp
