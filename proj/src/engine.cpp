#include "rgbp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "rgbp/lattice.hpp"  // SplitMix64

namespace rgbp {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::gbp_full: return "gbp_full";
    case Variant::rgbp_nonredundant: return "rgbp_nonredundant";
    case Variant::sgbp_ideal: return "sgbp_ideal";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "gbp_full" || s == "gbp") return Variant::gbp_full;
  if (s == "rgbp_nonredundant" || s == "rgbp" || s == "bp") return Variant::rgbp_nonredundant;
  if (s == "sgbp_ideal" || s == "sgbp") return Variant::sgbp_ideal;
  throw ConfigError("unknown variant: " + s);
}

namespace {

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

void normalize(std::vector<double>& t) {
  double s = 0;
  for (double v : t) s += v;
  if (!(s > 0) || !std::isfinite(s))
    throw NumericRangeError("message table lost normalizability");
  for (double& v : t) v /= s;
}

void floor_and_renormalize(std::vector<double>& t, double eps) {
  double mx = 0;
  for (double v : t) mx = std::max(mx, v);
  double fl = eps * mx;
  for (double& v : t) v = std::max(v, fl);
  normalize(t);
}

}  // namespace

std::vector<int> receiving_set(const RegionGraph& rg, int edge, Variant v) {
  const RegionEdge& e = rg.edge(edge);
  std::vector<int> out;
  for (int alpha = 0; alpha < rg.num_regions(); ++alpha) {
    const auto& b = rg.boundary(alpha);
    if (!std::binary_search(b.begin(), b.end(), e.parent)) continue;
    if (!rg.in_interior(e.child, alpha)) continue;
    if (v == Variant::sgbp_ideal && !sorted_disjoint(rg.ancestors(e.parent), b)) continue;
    out.push_back(alpha);
  }
  return out;
}

std::vector<int> select_dropped_edges(const RegionGraph& rg) {
  // The consistency condition on mu->nu is implied when some region
  // alpha has directed paths to both mu and to another held parent of
  // nu: marginalizing alpha's weight down both paths pins nu's weight
  // either way.  Group the parents of nu into components under the
  // shares-an-ancestor relation; one incoming edge per component must
  // stay enforced, the rest are implied and can be dropped.  Processing
  // strata of the DAG top-down keeps the derivation non-circular.
  auto related = [&](int a, int b) {
    std::vector<int> sa = rg.ancestors(a), sb = rg.ancestors(b);
    sa.insert(std::lower_bound(sa.begin(), sa.end(), a), a);
    sb.insert(std::lower_bound(sb.begin(), sb.end(), b), b);
    auto ia = sa.begin();
    auto ib = sb.begin();
    while (ia != sa.end() && ib != sb.end()) {
      if (*ia < *ib) ++ia;
      else if (*ib < *ia) ++ib;
      else return true;
    }
    return false;
  };
  std::vector<int> dropped;
  for (int nu = 0; nu < rg.num_regions(); ++nu) {
    const std::vector<int>& in = rg.in_edges(nu);
    if (in.size() < 2) continue;
    std::vector<int> comp(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) comp[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < in.size(); ++i)
      for (std::size_t j = i + 1; j < in.size(); ++j)
        if (comp[i] != comp[j] && related(rg.edge(in[i]).parent, rg.edge(in[j]).parent)) {
          const int from = comp[j], to = comp[i];
          for (int& c : comp)
            if (c == from) c = to;
        }
    for (std::size_t i = 0; i < in.size(); ++i) {
      std::size_t best = i;
      for (std::size_t j = 0; j < in.size(); ++j)
        if (comp[j] == comp[i] && in[j] < in[best]) best = j;
      if (best != i) dropped.push_back(in[i]);
    }
  }
  std::sort(dropped.begin(), dropped.end());
  return dropped;
}

Engine::Engine(const RegionGraph& rg, const FactorGraph& fg, double beta, EngineConfig cfg)
    : rg_(rg), fg_(fg), cfg_(cfg), beta_(beta) {
  if (beta < 0) throw ConfigError("beta must be >= 0");
  if (!(cfg_.damping > 0) || cfg_.damping > 1) throw ConfigError("damping must be in (0,1]");
  if (!(cfg_.tol > 0)) throw ConfigError("tol must be > 0");
  if (cfg_.z2_project && !fg_.all_binary())
    throw ConfigError("Z2 projection requires binary vertices");
  if (cfg_.variant == Variant::sgbp_ideal && !is_ideal(rg_))
    throw ConfigError("sgbp_ideal requested on a non-ideal region graph");
  if (cfg_.variant == Variant::rgbp_nonredundant &&
      redundancy_class(rg_) != RedundancyClass::non_redundant)
    throw ConfigError("rgbp_nonredundant requested on a redundant region graph");
  build_structure();
  build_energy_tables();
  refresh_psi();
  build_maps();
  reset(cfg_.init == InitKind::provided ? InitKind::uniform : cfg_.init, cfg_.seed);
}

void Engine::build_structure() {
  const int R = rg_.num_regions();
  table_size_.resize(R);
  for (int r = 0; r < R; ++r) {
    std::size_t s = 1;
    for (int v : rg_.region(r).vertices) {
      s *= static_cast<std::size_t>(fg_.vertex(v).alphabet_size);
      if (s > (1u << 16))
        throw ConfigError("region " + std::to_string(r) + " joint space exceeds 2^16");
    }
    table_size_[r] = s;
  }

  // Receiving sets E_alpha, computed by transposing the definition.
  const bool sgbp = cfg_.variant == Variant::sgbp_ideal;
  recv_edges_.assign(R, {});
  recv_regions_.assign(rg_.num_edges(), {});
  for (int alpha = 0; alpha < R; ++alpha) {
    const auto& b = rg_.boundary(alpha);
    for (int mu : b) {
      if (sgbp && !sorted_disjoint(rg_.ancestors(mu), b)) continue;
      for (int e : rg_.out_edges(mu))
        if (rg_.in_interior(rg_.edge(e).child, alpha)) recv_edges_[alpha].push_back(e);
    }
    std::sort(recv_edges_[alpha].begin(), recv_edges_[alpha].end());
    for (int e : recv_edges_[alpha]) recv_regions_[e].push_back(alpha);
  }

  active_.assign(rg_.num_edges(), 1);
  dropped_.clear();
  if (cfg_.active_edges == ActiveEdgePolicy::dropped_redundant) {
    dropped_ = select_dropped_edges(rg_);
    for (int e : dropped_) active_[e] = 0;
  }
  for (int e = 0; e < rg_.num_edges(); ++e) {
    if (!active_[e]) continue;
    const auto& own = recv_edges_[rg_.edge(e).child];
    if (!std::binary_search(own.begin(), own.end(), e))
      throw ConfigError("edge " + std::to_string(e) +
                        " does not receive its own message; cannot isolate the update");
  }

  edge_order_.resize(rg_.num_edges());
  for (int e = 0; e < rg_.num_edges(); ++e) edge_order_[e] = e;
  std::sort(edge_order_.begin(), edge_order_.end(), [&](int a, int b) {
    int da = rg_.depth(rg_.edge(a).parent), db = rg_.depth(rg_.edge(b).parent);
    return da != db ? da < db : a < b;
  });

  omega_.assign(R, {});
  log_z_.assign(R, 0.0);
  omega_dirty_.assign(R, 1);
}

void Engine::build_energy_tables() {
  const int R = rg_.num_regions();
  energy_.assign(R, {});
  for (int r = 0; r < R; ++r) {
    const Region& reg = rg_.region(r);
    std::vector<double>& E = energy_[r];
    E.assign(table_size_[r], 0.0);
    std::size_t stride = 1;
    for (int v : reg.vertices) {
      const VertexSpec& vs = fg_.vertex(v);
      const std::size_t q = vs.alphabet_size;
      for (std::size_t idx = 0; idx < E.size(); ++idx)
        E[idx] += vs.self_energy[(idx / stride) % q];
      stride *= q;
    }
    for (int a : reg.interactions) {
      const InteractionSpec& t = fg_.interaction(a);
      // Stride of each region digit inside the interaction table.
      std::vector<std::size_t> tstride(reg.vertices.size(), 0);
      std::size_t astride = 1;
      for (int m : t.members) {
        auto it = std::lower_bound(reg.vertices.begin(), reg.vertices.end(), m);
        tstride[it - reg.vertices.begin()] = astride;
        astride *= static_cast<std::size_t>(fg_.vertex(m).alphabet_size);
      }
      std::size_t rstride = 1;
      std::vector<std::size_t> rstrides, radix;
      for (int v : reg.vertices) {
        rstrides.push_back(rstride);
        radix.push_back(fg_.vertex(v).alphabet_size);
        rstride *= radix.back();
      }
      for (std::size_t idx = 0; idx < E.size(); ++idx) {
        std::size_t aidx = 0;
        for (std::size_t k = 0; k < reg.vertices.size(); ++k)
          if (tstride[k]) aidx += tstride[k] * ((idx / rstrides[k]) % radix[k]);
        E[idx] += t.energy[aidx];
      }
    }
  }
}

void Engine::refresh_psi() {
  psi_.assign(rg_.num_regions(), {});
  for (int r = 0; r < rg_.num_regions(); ++r) {
    psi_[r].resize(energy_[r].size());
    for (std::size_t i = 0; i < energy_[r].size(); ++i) {
      psi_[r][i] = std::exp(-beta_ * energy_[r][i]);
      if (!std::isfinite(psi_[r][i]))
        throw NumericRangeError("Boltzmann table overflow in region " + std::to_string(r));
    }
  }
  mark_all_dirty();
}

void Engine::set_beta(double beta) {
  if (beta < 0) throw ConfigError("beta must be >= 0");
  beta_ = beta;
  refresh_psi();
  state_.residual = std::numeric_limits<double>::infinity();
}

const std::vector<std::uint16_t>& Engine::submap(int alpha, int tau) const {
  std::int64_t key = static_cast<std::int64_t>(alpha) * rg_.num_regions() + tau;
  auto it = maps_.find(key);
  if (it != maps_.end()) return it->second;

  const auto& av = rg_.region(alpha).vertices;
  const auto& tv = rg_.region(tau).vertices;
  std::vector<std::size_t> tstride(av.size(), 0), rstrides(av.size()), radix(av.size());
  {
    std::size_t s = 1;
    for (int v : tv) {
      auto it2 = std::lower_bound(av.begin(), av.end(), v);
      tstride[it2 - av.begin()] = s;
      s *= static_cast<std::size_t>(fg_.vertex(v).alphabet_size);
    }
    s = 1;
    for (std::size_t k = 0; k < av.size(); ++k) {
      rstrides[k] = s;
      radix[k] = fg_.vertex(av[k]).alphabet_size;
      s *= radix[k];
    }
  }
  std::vector<std::uint16_t> m(table_size_[alpha]);
  std::vector<std::size_t> digit(av.size(), 0);
  std::size_t cur = 0;
  for (std::size_t idx = 0; idx < m.size(); ++idx) {
    m[idx] = static_cast<std::uint16_t>(cur);
    for (std::size_t k = 0; k < av.size(); ++k) {
      if (++digit[k] < radix[k]) {
        cur += tstride[k];
        break;
      }
      digit[k] = 0;
      cur -= tstride[k] * (radix[k] - 1);
    }
  }
  auto [ins, ok] = const_cast<Engine*>(this)->maps_.emplace(key, std::move(m));
  (void)ok;
  return ins->second;
}

void Engine::build_maps() {
  for (int alpha = 0; alpha < rg_.num_regions(); ++alpha) {
    for (int e : recv_edges_[alpha]) submap(alpha, rg_.edge(e).child);
    for (int c : rg_.children(alpha)) submap(alpha, c);
  }
}

void Engine::mark_all_dirty() {
  std::fill(omega_dirty_.begin(), omega_dirty_.end(), 1);
}

void Engine::refresh_omega(int alpha) {
  std::vector<double>& w = omega_[alpha];
  w = psi_[alpha];
  for (int e : recv_edges_[alpha]) {
    const std::vector<double>& m = state_.tables[e];
    const std::vector<std::uint16_t>& mp = submap(alpha, rg_.edge(e).child);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= m[mp[i]];
  }
  double z = 0;
  for (double v : w) z += v;
  if (!(z > 0) || !std::isfinite(z))
    throw NumericRangeError("region weight normalization failed in region " +
                            std::to_string(alpha));
  log_z_[alpha] = std::log(z);
  for (double& v : w) v /= z;
  omega_dirty_[alpha] = 0;
}

double Engine::log_region_z(int alpha) {
  if (omega_dirty_[alpha]) refresh_omega(alpha);
  return log_z_[alpha];
}

const std::vector<double>& Engine::region_omega(int alpha) {
  if (omega_dirty_[alpha]) refresh_omega(alpha);
  return omega_[alpha];
}

std::size_t Engine::message_size(int edge) const {
  return table_size_[rg_.edge(edge).child];
}

void Engine::reset(InitKind kind, std::uint64_t seed) {
  state_.tables.assign(rg_.num_edges(), {});
  SplitMix64 rng(seed);
  for (int e = 0; e < rg_.num_edges(); ++e) {
    std::vector<double>& t = state_.tables[e];
    t.assign(message_size(e), 1.0 / static_cast<double>(message_size(e)));
    // Inactive edges are never updated; leaving them at the uniform
    // table keeps the frozen reference unbiased under perturbed inits.
    if (kind == InitKind::random_perturbed && active_[e]) {
      for (double& v : t) v *= 1.0 + cfg_.init_noise * (2.0 * rng.next_double() - 1.0);
      normalize(t);
    }
  }
  state_.iteration = 0;
  state_.residual = std::numeric_limits<double>::infinity();
  mark_all_dirty();
}

void Engine::set_state(MessageState s) {
  if (s.tables.size() != static_cast<std::size_t>(rg_.num_edges()))
    throw ConfigError("message state has wrong edge count");
  for (int e = 0; e < rg_.num_edges(); ++e)
    if (s.tables[e].size() != message_size(e))
      throw ConfigError("message table size mismatch on edge " + std::to_string(e));
  state_ = std::move(s);
  mark_all_dirty();
}

void Engine::reset_iteration_count() { state_.iteration = 0; }

std::vector<double> Engine::update_edge(int edge) {
  const RegionEdge& ed = rg_.edge(edge);
  const std::vector<double>& wmu = region_omega(ed.parent);
  const std::vector<double>& wnu = region_omega(ed.child);
  const std::vector<std::uint16_t>& mp = submap(ed.parent, ed.child);

  std::vector<double> marg(table_size_[ed.child], 0.0);
  for (std::size_t i = 0; i < wmu.size(); ++i) marg[mp[i]] += wmu[i];

  const std::vector<double>& old = state_.tables[edge];
  std::vector<double> fresh(marg.size());
  for (std::size_t i = 0; i < marg.size(); ++i) fresh[i] = old[i] * marg[i] / wnu[i];
  for (double v : fresh)
    if (!std::isfinite(v))
      throw NumericRangeError("non-finite update on edge " + std::to_string(edge));
  normalize(fresh);
  floor_and_renormalize(fresh, cfg_.floor_eps);
  return fresh;
}

void Engine::commit(int edge, std::vector<double> fresh, double* residual) {
  std::vector<double>& cur = state_.tables[edge];
  const double lam = cfg_.damping;
  if (lam < 1.0)
    for (std::size_t i = 0; i < fresh.size(); ++i)
      fresh[i] = (1.0 - lam) * cur[i] + lam * fresh[i];
  if (cfg_.z2_project) {
    const std::size_t n = fresh.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
      double avg = 0.5 * (fresh[i] + fresh[n - 1 - i]);
      fresh[i] = fresh[n - 1 - i] = avg;
    }
  }
  floor_and_renormalize(fresh, cfg_.floor_eps);
  for (std::size_t i = 0; i < fresh.size(); ++i)
    *residual = std::max(*residual, std::abs(fresh[i] - cur[i]));
  cur = std::move(fresh);
}

void Engine::sweep() {
  double residual = 0.0;
  if (cfg_.schedule == Schedule::jacobi) {
    std::vector<std::pair<int, std::vector<double>>> updates;
    updates.reserve(rg_.num_edges());
    for (int e = 0; e < rg_.num_edges(); ++e)
      if (active_[e]) updates.emplace_back(e, update_edge(e));
    for (auto& [e, t] : updates) commit(e, std::move(t), &residual);
    mark_all_dirty();
  } else {
    for (int e : edge_order_) {
      if (!active_[e]) continue;
      commit(e, update_edge(e), &residual);
      for (int alpha : recv_regions_[e]) omega_dirty_[alpha] = 1;
    }
  }
  state_.residual = residual;
  ++state_.iteration;
}

bool Engine::solve() {
  while (state_.iteration < cfg_.max_iters) {
    sweep();
    if (state_.residual < cfg_.tol) return true;
  }
  return state_.residual < cfg_.tol;
}

double Engine::consistency_residual(int edge) {
  const RegionEdge& ed = rg_.edge(edge);
  const std::vector<double>& wmu = region_omega(ed.parent);
  const std::vector<double>& wnu = region_omega(ed.child);
  const std::vector<std::uint16_t>& mp = submap(ed.parent, ed.child);
  std::vector<double> marg(table_size_[ed.child], 0.0);
  for (std::size_t i = 0; i < wmu.size(); ++i) marg[mp[i]] += wmu[i];
  double r = 0;
  for (std::size_t i = 0; i < marg.size(); ++i) r = std::max(r, std::abs(marg[i] - wnu[i]));
  return r;
}

void Engine::save_checkpoint(std::ostream& os) const {
  char buf[64];
  os << "rgbp-checkpoint " << to_string(cfg_.variant);
  std::snprintf(buf, sizeof(buf), " %.17g", beta_);
  os << buf;
  std::snprintf(buf, sizeof(buf), " %.17g", cfg_.damping);
  os << buf << " " << state_.iteration;
  std::snprintf(buf, sizeof(buf), " %.17g", state_.residual);
  os << buf << "\n";
  for (int e = 0; e < rg_.num_edges(); ++e) {
    os << "M " << e << " " << state_.tables[e].size();
    for (double v : state_.tables[e]) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      os << buf;
    }
    os << "\n";
  }
}

void Engine::load_checkpoint(std::istream& is) {
  std::string tag, variant;
  double beta, damping, residual;
  long iteration;
  if (!(is >> tag >> variant >> beta >> damping >> iteration >> residual) ||
      tag != "rgbp-checkpoint")
    throw ConfigError("bad checkpoint header");
  if (variant_from_string(variant) != cfg_.variant)
    throw ConfigError("checkpoint variant mismatch");
  MessageState s;
  s.tables.assign(rg_.num_edges(), {});
  for (int k = 0; k < rg_.num_edges(); ++k) {
    std::string m;
    int e;
    std::size_t n;
    if (!(is >> m >> e >> n) || m != "M") throw ConfigError("bad checkpoint message line");
    s.tables.at(e).resize(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!(is >> s.tables[e][i])) throw ConfigError("truncated checkpoint table");
  }
  s.iteration = iteration;
  s.residual = residual;
  set_beta(beta);
  set_state(std::move(s));
  state_.residual = residual;
}

}  // namespace rgbp
