#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgbp/engine.hpp"
#include "rgbp/lattice.hpp"
#include "rgbp/oracles.hpp"
#include "rgbp/stability.hpp"
#include "rgbp/thermo.hpp"

namespace {

constexpr const char* kVersion = "rgbp 1.0.0";

std::string g12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<double> parse_beta_grid(const std::string& s) {
  std::vector<double> out;
  const auto c1 = s.find(':');
  if (c1 == std::string::npos) {
    out.push_back(std::stod(s));
    return out;
  }
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw rgbp::ConfigError("beta grid must be start:stop:step or a single value");
  const double start = std::stod(s.substr(0, c1));
  const double stop = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(s.substr(c2 + 1));
  if (!(step > 0) || stop < start) throw rgbp::ConfigError("beta grid empty or step <= 0");
  for (double b = start; b <= stop + 0.5 * step; b += step) out.push_back(b);
  return out;
}

struct OutFile {
  std::ofstream file;
  std::ostream& stream(const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw rgbp::ConfigError("cannot open output file " + path);
    return file;
  }
};

void write_header(std::ostream& os, int argc, char** argv) {
  os << "# " << kVersion << "\n# command:";
  for (int i = 0; i < argc; ++i) os << " " << argv[i];
  os << "\n";
  if (const char* w = std::getenv("RGBP_WORKERS"))
    os << "# workers: " << w << " (requested; execution is single-threaded)\n";
}

struct CommonOpts {
  std::string lattice = "dim=2,L=8,model=ferro";
  std::string regions = "family=2d,n=2";
  std::string variant = "sgbp";
  std::string instance_in, instance_out;
  double damping = 1.0;
  std::string schedule = "jacobi";
  long max_iters = 20000;
  double tol = 1e-10;
  bool drop_redundant = false;
  bool z2 = false;
  std::string init = "uniform";
  std::uint64_t seed = 1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_engine = true) {
  cmd->add_option("--lattice", o.lattice, "dim=2,L=64,model=ferro|ea[,seed=...,h=...]");
  cmd->add_option("--regions", o.regions, "family=2d|3d|bethe[,n=...]");
  cmd->add_option("--instance", o.instance_in, "load couplings/fields from an instance file");
  cmd->add_option("--save-instance", o.instance_out, "write the instance file and continue");
  cmd->add_option("--out,-o", o.out, "output path ('-' = stdout)");
  if (with_engine) {
    cmd->add_option("--variant", o.variant, "gbp | rgbp | sgbp");
    cmd->add_option("--damping", o.damping, "mixing weight of the new message, (0,1]");
    cmd->add_option("--schedule", o.schedule, "jacobi | sequential");
    cmd->add_option("--max-iters", o.max_iters);
    cmd->add_option("--tol", o.tol);
    cmd->add_flag("--drop-redundant", o.drop_redundant, "freeze loop-closing messages");
    cmd->add_flag("--z2", o.z2, "project onto the spin-flip-symmetric subspace");
    cmd->add_option("--init", o.init, "uniform | random");
    cmd->add_option("--seed", o.seed, "init perturbation seed");
  }
}

rgbp::Lattice make_lattice(const CommonOpts& o) {
  if (!o.instance_in.empty()) {
    std::ifstream is(o.instance_in);
    if (!is) throw rgbp::ConfigError("cannot read instance file " + o.instance_in);
    return rgbp::load_instance(is);
  }
  return rgbp::build_lattice(rgbp::parse_lattice_spec(o.lattice));
}

rgbp::EngineConfig make_config(const CommonOpts& o) {
  rgbp::EngineConfig cfg;
  cfg.variant = rgbp::variant_from_string(o.variant);
  cfg.damping = o.damping;
  if (o.schedule == "jacobi") cfg.schedule = rgbp::Schedule::jacobi;
  else if (o.schedule == "sequential") cfg.schedule = rgbp::Schedule::sequential;
  else throw rgbp::ConfigError("unknown schedule " + o.schedule);
  cfg.max_iters = o.max_iters;
  cfg.tol = o.tol;
  cfg.active_edges = o.drop_redundant ? rgbp::ActiveEdgePolicy::dropped_redundant
                                      : rgbp::ActiveEdgePolicy::all;
  if (o.init == "uniform") cfg.init = rgbp::InitKind::uniform;
  else if (o.init == "random") cfg.init = rgbp::InitKind::random_perturbed;
  else throw rgbp::ConfigError("unknown init " + o.init);
  cfg.seed = o.seed;
  cfg.z2_project = o.z2;
  return cfg;
}

void maybe_save_instance(const CommonOpts& o, const rgbp::Lattice& lat) {
  if (o.instance_out.empty()) return;
  std::ofstream os(o.instance_out);
  if (!os) throw rgbp::ConfigError("cannot write instance file " + o.instance_out);
  rgbp::save_instance(os, lat);
}

void emit_row(std::ostream& os, double beta, double f, double u, double s, double m,
              bool converged, double residual, long iters) {
  os << g12(beta) << "," << g12(f) << "," << g12(u) << "," << g12(s) << "," << g12(m)
     << "," << (converged ? 1 : 0) << "," << g12(residual) << "," << iters << "\n";
}

int run_sweep(const CommonOpts& o, const std::string& beta_grid, int argc, char** argv) {
  const rgbp::Lattice lat = make_lattice(o);
  maybe_save_instance(o, lat);
  const rgbp::RegionGraph rg =
      rgbp::build_region_graph(lat, rgbp::parse_region_spec(o.regions));
  rgbp::Engine eng(rg, lat.graph, parse_beta_grid(beta_grid).front(), make_config(o));

  OutFile of;
  std::ostream& os = of.stream(o.out);
  write_header(os, argc, argv);
  os << "beta,f,u,s,m,converged,residual,iters\n";
  for (double beta : parse_beta_grid(beta_grid)) {
    eng.set_beta(beta);
    eng.reset_iteration_count();
    eng.solve();
    const rgbp::ThermoReport t = rgbp::observables(eng);
    emit_row(os, beta, t.free_energy_density, t.energy_density, t.entropy_density,
             t.magnetization, t.converged, t.residual, t.iters);
    for (const std::string& w : t.warnings) os << "# warning: " << w << "\n";
  }
  return 0;
}

int run_oracle(const CommonOpts& o, const std::string& beta_grid, const std::string& method,
               int argc, char** argv) {
  OutFile of;
  std::ostream& os = of.stream(o.out);
  write_header(os, argc, argv);
  os << "beta,f,u,s,m,converged,residual,iters\n";
  for (double beta : parse_beta_grid(beta_grid)) {
    if (method == "onsager") {
      const rgbp::OnsagerResult r = rgbp::onsager(beta);
      emit_row(os, beta, r.free_energy_density, r.energy_density, r.entropy_density,
               r.magnetization, true, 0.0, 0);
    } else if (method == "enum") {
      const rgbp::Lattice lat = make_lattice(o);
      maybe_save_instance(o, lat);
      const rgbp::ExactResult r = rgbp::enumerate_exact(lat.graph, beta);
      emit_row(os, beta, r.free_energy_density, r.energy_density, r.entropy_density,
               r.magnetization, true, 0.0, 0);
    } else if (method == "transfer") {
      const rgbp::Lattice lat = make_lattice(o);
      maybe_save_instance(o, lat);
      const double lz = rgbp::transfer_matrix_log_z(lat, beta);
      const int n = lat.num_sites();
      emit_row(os, beta, -lz / (beta * n), 0.0, 0.0, 0.0, true, 0.0, 0);
    } else {
      throw rgbp::ConfigError("unknown oracle method " + method);
    }
  }
  return 0;
}

int run_validate(const CommonOpts& o, bool dump, int argc, char** argv) {
  const rgbp::Lattice lat = make_lattice(o);
  maybe_save_instance(o, lat);
  const rgbp::RegionGraph rg =
      rgbp::build_region_graph(lat, rgbp::parse_region_spec(o.regions));
  OutFile of;
  std::ostream& os = of.stream(o.out);
  write_header(os, argc, argv);

  const rgbp::ValidationReport rep = rgbp::validate(rg, lat.graph);
  const auto cls = rgbp::check_edge_identities(rg);
  const bool ideal = rgbp::is_ideal(rg);
  const bool redundant = rgbp::redundancy_class(rg) == rgbp::RedundancyClass::redundant;

  int vertex_fail = 0, interaction_fail = 0;
  for (const auto& e : rep.entries)
    if (e.counting_sum != 1 || !e.connected) (e.is_vertex ? vertex_fail : interaction_fail)++;
  os << "regions: " << rg.num_regions() << "  edges: " << rg.num_edges() << "\n";
  os << "counting sums: " << (rep.pass ? "all 1" : "FAIL") << " (" << vertex_fail
     << " vertex, " << interaction_fail << " interaction failures)\n";
  os << "edge identities: all receiving-set sums zero over " << cls.size() << " edges\n";
  os << "redundancy: " << (redundant ? "redundant" : "non-redundant") << "\n";
  os << "ideal: " << (ideal ? "yes" : "no") << "\n";
  if (dump) os << rg.dump();
  return rep.pass ? 0 : 1;
}

int run_stability(const CommonOpts& o, double lo, double hi, double rho_tol,
                  double beta_tol, int argc, char** argv) {
  const rgbp::Lattice lat = make_lattice(o);
  maybe_save_instance(o, lat);
  const rgbp::RegionGraph rg =
      rgbp::build_region_graph(lat, rgbp::parse_region_spec(o.regions));
  const rgbp::StabilityResult r =
      rgbp::find_beta_c(rg, lat.graph, make_config(o), lo, hi, rho_tol, beta_tol);
  OutFile of;
  std::ostream& os = of.stream(o.out);
  write_header(os, argc, argv);
  os << "beta,rho,rho_converged,fp_converged,fp_iters\n";
  for (const rgbp::StabilityPoint& p : r.curve)
    os << g12(p.beta) << "," << g12(p.rho) << "," << (p.rho_converged ? 1 : 0) << ","
       << (p.fp_converged ? 1 : 0) << "," << p.fp_iters << "\n";
  os << "# beta_c: " << g12(r.beta_c) << "\n";
  std::cerr << "beta_c " << g12(r.beta_c) << "\n";
  return 0;
}

int run_ea3d(const CommonOpts& o, const std::vector<int>& sizes, int instances,
             std::uint64_t seed0, double lo, double hi, int argc, char** argv) {
  const rgbp::EaSweepResult r =
      rgbp::ea3d_sweep(sizes, instances, seed0, make_config(o), lo, hi);
  OutFile of;
  std::ostream& os = of.stream(o.out);
  write_header(os, argc, argv);
  os << "L,instance_seed,beta_c,rho_tol,converged\n";
  for (const rgbp::DisorderSweep& ds : r.sweeps) {
    for (std::size_t i = 0; i < ds.beta_c.size(); ++i)
      os << ds.side_length << "," << ds.seeds[i] << "," << g12(ds.beta_c[i]) << ",1e-4,1\n";
    for (std::uint64_t s : ds.failed_seeds)
      os << ds.side_length << "," << s << ",nan,1e-4,0\n";
  }
  os << "# fit: intercept " << g12(r.fit.intercept) << " +- " << g12(r.fit.intercept_stderr)
     << ", slope " << g12(r.fit.slope) << " +- " << g12(r.fit.slope_stderr) << "\n";
  for (const rgbp::DisorderSweep& ds : r.sweeps)
    os << "# mean beta_c L=" << ds.side_length << ": " << g12(ds.mean) << " +- "
       << g12(ds.std_error) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-graph belief propagation experiment driver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts o;
  std::string beta_grid = "0.1:1.0:0.1";
  std::string method = "enum";
  bool dump = false;
  double lo = 0.30, hi = 0.50, rho_tol = 1e-4, beta_tol = 1e-5;
  std::vector<int> sizes{4, 6, 8};
  int instances = 32;
  std::uint64_t seed0 = 1;

  CLI::App* sweep = app.add_subcommand("sweep", "temperature sweep, CSV of f,u,s,m");
  add_common(sweep, o);
  sweep->add_option("--beta", beta_grid, "start:stop:step or a single value");

  CLI::App* oracle = app.add_subcommand("oracle", "exact reference values");
  add_common(oracle, o, false);
  oracle->add_option("--beta", beta_grid, "start:stop:step or a single value");
  oracle->add_option("--method", method, "enum | transfer | onsager");

  CLI::App* validate = app.add_subcommand("validate", "region-graph structure checks");
  add_common(validate, o, false);
  validate->add_flag("--dump", dump, "dump regions and edges");

  CLI::App* stability = app.add_subcommand("stability", "instability point by bisection");
  add_common(stability, o);
  stability->add_option("--beta-lo", lo);
  stability->add_option("--beta-hi", hi);
  stability->add_option("--rho-tol", rho_tol);
  stability->add_option("--beta-tol", beta_tol);

  CLI::App* ea3d = app.add_subcommand("ea3d", "3D +-J disorder ensemble and 1/L fit");
  add_common(ea3d, o);
  ea3d->add_option("--sizes", sizes, "lattice sides, e.g. 4 6 8");
  ea3d->add_option("--instances", instances);
  ea3d->add_option("--ensemble-seed", seed0);
  ea3d->add_option("--beta-lo", lo)->default_val(0.30);
  ea3d->add_option("--beta-hi", hi)->default_val(1.00);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sweep->parsed()) return run_sweep(o, beta_grid, argc, argv);
    if (oracle->parsed()) return run_oracle(o, beta_grid, method, argc, argv);
    if (validate->parsed()) return run_validate(o, dump, argc, argv);
    if (stability->parsed())
      return run_stability(o, lo, hi, rho_tol, beta_tol, argc, argv);
    if (ea3d->parsed()) return run_ea3d(o, sizes, instances, seed0, lo, hi, argc, argv);
  } catch (const rgbp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
