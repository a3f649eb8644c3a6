#pragma once

#include <cstdint>
#include <vector>

#include "rgbp/factor_graph.hpp"
#include "rgbp/lattice.hpp"

namespace rgbp {

// Ground truth by direct summation over the joint configuration space.
struct ExactResult {
  double log_z = 0;
  double free_energy_density = 0;  // NaN at beta = 0
  double energy_density = 0;
  double entropy_density = 0;
  double magnetization = 0;  // 0 for non-binary alphabets
  std::vector<std::vector<double>> vertex_marginals;
};

ExactResult enumerate_exact(const FactorGraph& fg, double beta,
                            std::uint64_t state_cap = (1ull << 26));

// Exact joint marginal over an arbitrary vertex subset (sorted order,
// first vertex fastest-varying), by the same direct summation.
std::vector<double> exact_subset_marginal(const FactorGraph& fg, double beta,
                                          const std::vector<int>& vertices,
                                          std::uint64_t state_cap = (1ull << 26));

// Independent check of enumerate_exact for two-dimensional tori: exact
// log Z by a row-to-row transfer operator applied to every basis vector
// (trace over periodic columns), with running log rescaling.
double transfer_matrix_log_z(const Lattice& lat, double beta);

// Closed forms for the infinite square-lattice ferromagnet at J = 1,
// zero field.
struct OnsagerResult {
  double free_energy_density;
  double energy_density;
  double entropy_density;
  double magnetization;
};

OnsagerResult onsager(double beta);
double onsager_beta_c();  // ln(1 + sqrt 2) / 2

}  // namespace rgbp
