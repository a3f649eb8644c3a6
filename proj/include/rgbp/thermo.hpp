#pragma once

#include <string>
#include <vector>

#include "rgbp/engine.hpp"

namespace rgbp {

struct ThermoReport {
  double beta = 0;
  double free_energy_density = 0;  // NaN at beta = 0 (ill-posed limit)
  double energy_density = 0;
  double entropy_density = 0;
  double magnetization = 0;
  bool beta_zero_limit = false;
  bool converged = false;
  double residual = 0;
  long iters = 0;
  // Largest disagreement between two regions' expectations of the same
  // energy term; > 1e-6 adds a warning instead of failing.
  double max_term_discrepancy = 0;
  std::vector<std::string> warnings;
};

// Counting-weighted free energy per vertex from the current messages:
// -(1/(beta N)) * sum_alpha c_alpha * ln z_alpha.
double free_energy(Engine& eng);

// Normalized region weight tables for every region.
std::vector<std::vector<double>> region_marginals(Engine& eng);

// Marginal of one vertex, extracted from the smallest region containing
// it.
std::vector<double> vertex_marginal(Engine& eng, int vertex);

// f, u, s, m densities; u from term expectations under the smallest
// containing region, s = beta * (u - f), with a direct entropy sum at
// beta = 0.
ThermoReport observables(Engine& eng);

}  // namespace rgbp
