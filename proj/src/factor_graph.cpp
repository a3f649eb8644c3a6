#include "rgbp/factor_graph.hpp"

#include <cmath>

namespace rgbp {

FactorGraph::FactorGraph(std::vector<VertexSpec> vertices,
                         std::vector<InteractionSpec> interactions)
    : vertices_(std::move(vertices)), interactions_(std::move(interactions)) {
  for (int i = 0; i < num_vertices(); ++i) {
    const VertexSpec& v = vertices_[i];
    if (v.id != i) throw std::invalid_argument("vertex ids must be dense, 0..N-1");
    if (v.alphabet_size < 2) throw std::invalid_argument("alphabet_size must be >= 2");
    if (static_cast<int>(v.self_energy.size()) != v.alphabet_size)
      throw std::invalid_argument("self_energy table size mismatch");
    for (double e : v.self_energy)
      if (!std::isfinite(e)) throw std::invalid_argument("non-finite self energy");
  }
  vertex_interactions_.resize(vertices_.size());
  for (int a = 0; a < num_interactions(); ++a) {
    const InteractionSpec& t = interactions_[a];
    if (t.id != a) throw std::invalid_argument("interaction ids must be dense, 0..M-1");
    if (t.members.empty()) throw std::invalid_argument("interaction with no members");
    std::size_t table = 1;
    std::vector<bool> seen(vertices_.size(), false);
    for (int m : t.members) {
      if (m < 0 || m >= num_vertices())
        throw std::invalid_argument("interaction member out of range");
      if (seen[m]) throw std::invalid_argument("duplicate interaction member");
      seen[m] = true;
      table *= static_cast<std::size_t>(vertices_[m].alphabet_size);
      vertex_interactions_[m].push_back(a);
    }
    if (t.energy.size() != table)
      throw std::invalid_argument("interaction energy table size mismatch");
    for (double e : t.energy)
      if (!std::isfinite(e)) throw std::invalid_argument("non-finite interaction energy");
  }
}

double FactorGraph::total_energy(std::span<const State> config) const {
  if (static_cast<int>(config.size()) != num_vertices())
    throw DimensionError("configuration length does not match vertex count");
  double e = 0.0;
  for (int i = 0; i < num_vertices(); ++i) {
    State s = config[i];
    if (s < 0 || s >= vertices_[i].alphabet_size)
      throw DimensionError("state index out of range for vertex " + std::to_string(i));
    e += vertices_[i].self_energy[s];
  }
  for (int a = 0; a < num_interactions(); ++a) e += interaction_energy(a, config);
  return e;
}

double FactorGraph::interaction_energy(int a, std::span<const State> config) const {
  const InteractionSpec& t = interactions_.at(a);
  std::size_t idx = 0, stride = 1;
  for (int m : t.members) {
    idx += stride * static_cast<std::size_t>(config[m]);
    stride *= static_cast<std::size_t>(vertices_[m].alphabet_size);
  }
  return t.energy[idx];
}

bool FactorGraph::all_binary() const {
  for (const VertexSpec& v : vertices_)
    if (v.alphabet_size != 2) return false;
  return true;
}

namespace {
double checked_exp(double x) {
  double r = std::exp(x);
  if (!std::isfinite(r))
    throw NumericRangeError("boltzmann factor overflow, exponent " + std::to_string(x));
  return r;
}
}  // namespace

double boltzmann_factor(const VertexSpec& v, State s, double beta) {
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  return checked_exp(-beta * v.self_energy.at(s));
}

double boltzmann_factor(const InteractionSpec& a, const FactorGraph& g,
                        std::span<const State> sub, double beta) {
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  if (sub.size() != a.members.size())
    throw DimensionError("sub-configuration does not match interaction scope");
  std::size_t idx = 0, stride = 1;
  for (std::size_t k = 0; k < a.members.size(); ++k) {
    idx += stride * static_cast<std::size_t>(sub[k]);
    stride *= static_cast<std::size_t>(g.vertex(a.members[k]).alphabet_size);
  }
  return checked_exp(-beta * a.energy[idx]);
}

VertexSpec make_spin_vertex(int id, double h0) {
  return VertexSpec{id, 2, {h0, -h0}};  // E(x) = -h0 * x, x in {-1,+1}
}

InteractionSpec make_pair_coupling(int id, int i, int j, double J) {
  // E(xi, xj) = -J * xi * xj; index = xi + 2*xj with state 0 -> -1.
  return InteractionSpec{id, {i, j}, {-J, J, J, -J}};
}

}  // namespace rgbp
