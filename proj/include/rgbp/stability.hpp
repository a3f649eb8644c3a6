#pragma once

#include <cstdint>
#include <vector>

#include "rgbp/engine.hpp"

namespace rgbp {

struct StabilityPoint {
  double beta = 0;
  double rho = 0;
  bool rho_converged = false;
  bool fp_converged = false;
  long fp_iters = 0;
};

struct StabilityResult {
  double beta_c = 0;
  std::vector<StabilityPoint> curve;
  double rho_tol = 0;
  double beta_tol = 0;
  bool bracketed = false;
};

struct DisorderSweep {
  int side_length = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> beta_c;  // per converged instance
  std::vector<std::uint64_t> failed_seeds;  // could not bracket; excluded
  double mean = 0;
  double std_error = 0;
};

struct LinearFit {
  double intercept = 0, slope = 0;
  double intercept_stderr = 0, slope_stderr = 0;
};

struct EaSweepResult {
  std::vector<DisorderSweep> sweeps;
  LinearFit fit;  // beta_c against 1/L over all instances
};

// The global-spin-flip-symmetric fixed point at zero field, found by
// projecting the messages onto the symmetric subspace after every
// sweep.  Throws ConfigError on a nonzero field.
MessageState paramagnetic_fixed_point(const RegionGraph& rg, const FactorGraph& fg,
                                      double beta, EngineConfig cfg);

// Largest |eigenvalue| of the one-sweep map linearized at the given
// state, by power iteration with finite-difference directional
// derivatives.  `probe` should use a damped Jacobi schedule with no
// symmetry projection; its message state is clobbered.  The damping
// maps an eigenvalue mu of the undamped sweep to (1-lambda)+lambda*mu,
// which suppresses the oscillatory (negative real part) modes that the
// fixed point carries at every temperature while leaving the location
// of the mu = 1 instability crossing unchanged, so the transition
// point detected through this probe is independent of lambda.
// `warm` carries the power vector between calls at nearby beta.
double spectral_radius(Engine& probe, const MessageState& fixed_point,
                       std::uint64_t seed = 1, int max_iters = 500, double tol = 1e-6,
                       std::vector<double>* warm = nullptr, bool* converged = nullptr);

// Convenience form that builds the probe engine itself.
double spectral_radius(const RegionGraph& rg, const FactorGraph& fg,
                       const MessageState& fixed_point, double beta, EngineConfig cfg);

// Bisection on the instability threshold.  Both the fixed-point solve
// and the probe run with every edge active; since the redundant
// parametrization keeps an eigenvalue exactly at 1 (manifold of
// equivalent fixed points), a point counts as unstable only when
// rho > 1 + rho_tol.  Requires beta_lo stable and beta_hi unstable.
StabilityResult find_beta_c(const RegionGraph& rg, const FactorGraph& fg, EngineConfig cfg,
                            double beta_lo, double beta_hi, double rho_tol = 1e-4,
                            double beta_tol = 1e-5);

// Instability temperatures for an ensemble of 3D +-J disorder
// realizations, plus the least-squares fit of beta_c against 1/L.
EaSweepResult ea3d_sweep(const std::vector<int>& sizes, int instances_per_size,
                         std::uint64_t seed0, EngineConfig cfg, double beta_lo = 0.30,
                         double beta_hi = 1.00);

}  // namespace rgbp
