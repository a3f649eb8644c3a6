#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <unordered_map>
#include <vector>

#include "rgbp/factor_graph.hpp"
#include "rgbp/region_graph.hpp"

namespace rgbp {

enum class Variant { gbp_full, rgbp_nonredundant, sgbp_ideal };
enum class Schedule { jacobi, sequential };
enum class ActiveEdgePolicy { all, dropped_redundant };
enum class InitKind { uniform, random_perturbed, provided };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct EngineConfig {
  Variant variant = Variant::sgbp_ideal;
  double damping = 1.0;  // lambda in (0, 1]; 1 = undamped
  Schedule schedule = Schedule::jacobi;
  long max_iters = 20000;
  double tol = 1e-10;
  ActiveEdgePolicy active_edges = ActiveEdgePolicy::all;
  InitKind init = InitKind::uniform;
  std::uint64_t seed = 0;
  double init_noise = 1e-2;   // relative size of the random init perturbation
  double floor_eps = 1e-12;   // relative message floor
  bool z2_project = false;    // project onto the spin-flip-symmetric subspace
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One normalized probability table per directed edge, over the child
// region's joint configurations.
struct MessageState {
  std::vector<std::vector<double>> tables;
  long iteration = 0;
  double residual = std::numeric_limits<double>::infinity();
};

// Set-builder evaluation of the regions whose Boltzmann factor includes
// the message on `edge`: {alpha : mu in B_alpha, nu in I_alpha} for GBP,
// additionally A_mu disjoint from B_alpha for SGBP.
std::vector<int> receiving_set(const RegionGraph& rg, int edge, Variant v);

// Directed edges whose consistency conditions are implied by the rest:
// among the incoming edges of each region, one edge per group of
// common-ancestry-related parents stays enforced and the others are
// implied through the shared ancestor.  Updates on these edges may be
// skipped; their messages stay frozen.
std::vector<int> select_dropped_edges(const RegionGraph& rg);

// Iterates the parent-to-child fixed-point equations at one beta.
// The update on edge mu->nu multiplies the current message by the
// parent/child weight-consistency ratio, which is algebraically the
// resolution of the implicit GBP/SGBP equation for the swept message.
class Engine {
 public:
  Engine(const RegionGraph& rg, const FactorGraph& fg, double beta, EngineConfig cfg);

  const RegionGraph& region_graph() const { return rg_; }
  const FactorGraph& factor_graph() const { return fg_; }
  const EngineConfig& config() const { return cfg_; }
  double beta() const { return beta_; }
  void set_beta(double beta);  // keeps messages, re-tabulates Boltzmann factors

  const MessageState& state() const { return state_; }
  void set_state(MessageState s);
  void reset(InitKind kind, std::uint64_t seed = 0);
  void reset_iteration_count();

  std::size_t message_size(int edge) const;
  bool edge_active(int edge) const { return active_[edge] != 0; }
  const std::vector<int>& dropped_edges() const { return dropped_; }

  // Undamped single-edge update from the current state.
  std::vector<double> update_edge(int edge);

  // One pass over all active edges with damping and schedule applied.
  void sweep();

  // Sweeps until residual < tol or iteration >= max_iters.
  bool solve();

  // Region quantities from the current messages (variant-specific
  // receiving sets).
  double log_region_z(int alpha);
  const std::vector<double>& region_omega(int alpha);
  const std::vector<int>& region_receiving_edges(int alpha) const {
    return recv_edges_.at(alpha);
  }

  // L_inf distance between the parent weight marginalized onto the child
  // and the child weight (the consistency condition on one edge).
  double consistency_residual(int edge);

  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

 private:
  void build_structure();
  void build_maps();
  void build_energy_tables();
  void refresh_psi();
  void refresh_omega(int alpha);
  void mark_all_dirty();
  void commit(int edge, std::vector<double> fresh, double* residual);
  const std::vector<std::uint16_t>& submap(int alpha, int tau) const;

  const RegionGraph& rg_;
  const FactorGraph& fg_;
  EngineConfig cfg_;
  double beta_;
  MessageState state_;

  std::vector<std::size_t> table_size_;          // per region
  std::vector<std::vector<double>> energy_;      // per region, beta-independent
  std::vector<std::vector<double>> psi_;         // exp(-beta * energy)
  std::vector<std::vector<double>> omega_;       // per region, lazily refreshed
  std::vector<double> log_z_;                    // per region
  std::vector<char> omega_dirty_;
  std::vector<std::vector<int>> recv_edges_;     // E_alpha for cfg_.variant
  std::vector<std::vector<int>> recv_regions_;   // per edge: alpha with edge in E_alpha
  std::vector<char> active_;
  std::vector<int> dropped_;
  std::vector<int> edge_order_;                  // sequential schedule order
  std::unordered_map<std::int64_t, std::vector<std::uint16_t>> maps_;
};

}  // namespace rgbp
