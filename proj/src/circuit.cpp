#include "pumpkit/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pumpkit/errors.hpp"
#include "pumpkit/parallel.hpp"
#include "pumpkit/rng.hpp"

namespace pumpkit::circuit {

using cplx = std::complex<double>;
namespace {
constexpr cplx kI{0.0, 1.0};
constexpr double kIntegerTol = 1e-9;
}

// ---------------------------------------------------------------------------
// validation & construction

void TubeConfig::validate() const {
  if (n_cells < 1) throw ConfigError("TubeConfig.n_cells must be >= 1");
  if (!(filling >= 0.0 && filling <= 1.0))
    throw ConfigError("TubeConfig.filling must lie in [0, 1]");
  if (!(singles_fraction >= 0.0 && singles_fraction <= 1.0))
    throw ConfigError("TubeConfig.singles_fraction must lie in [0, 1]");
}

void STOSettings::validate() const {
  if (!(f1_hz > 0.0)) throw ConfigError("STOSettings.f1 must be positive");
  for (double t : tau_s)
    if (!std::isfinite(t) || t < 0.0)
      throw ConfigError("STOSettings.tau values must be finite and >= 0");
}

void NoiseModel::validate() const {
  if (!(survival >= 0.0 && survival <= 1.0))
    throw ConfigError("NoiseModel.survival must lie in [0, 1]");
  if (!(alpha_sigma >= 0.0))
    throw ConfigError("NoiseModel.alpha_sigma must be >= 0");
}

Circuit Circuit::uniform(const std::vector<double>& alphas) {
  Circuit c;
  for (double a : alphas) c.layers.push_back(Layer{a, {}});
  return c;
}

int TubeState::atom_count() const {
  int n = 0;
  for (const auto& a : atoms)
    if (a.alive) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// tube initialization

namespace {

struct CellLayout {
  std::vector<int> pair_cells;               // cells hosting a singlet pair
  std::vector<std::pair<int, int>> singles;  // (cell, spin up = 1)
};

CellLayout draw_layout(const TubeConfig& config, std::mt19937_64& rng) {
  CellLayout layout;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int c = 0; c < config.n_cells; ++c) {
    if (uni(rng) < config.filling) {
      layout.pair_cells.push_back(c);
    } else if (config.singles_fraction > 0.0 &&
               uni(rng) < config.singles_fraction) {
      const int spin = uni(rng) < 0.5 ? 1 : 0;
      layout.singles.emplace_back(c, spin);
    }
  }
  return layout;
}

void build_state_vector(TubeState& state, const std::vector<int>& single_spins) {
  const int n = static_cast<int>(state.atoms.size());
  if (n > 14)
    throw ConfigError(
        "init_tube: state-vector engine is limited to 14 atoms per tube");
  auto& sv = state.sv_sector;
  sv.n_atoms = n;
  sv.psi = Eigen::VectorXcd::Zero(std::size_t{1} << n);

  const double amp = std::pow(std::sqrt(0.5),
                              static_cast<double>(state.initial_pairs.size()));
  // map singles in label order to their drawn spins
  std::vector<int> is_paired(n, 0);
  for (auto [a, b] : state.initial_pairs) is_paired[a] = is_paired[b] = 1;
  std::vector<int> single_spin_of(n, -1);
  {
    std::size_t k = 0;
    for (int l = 0; l < n; ++l)
      if (!is_paired[l]) single_spin_of[l] = single_spins.at(k++);
  }

  const std::size_t dim = std::size_t{1} << n;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double sign = 1.0;
    bool ok = true;
    for (auto [a, b] : state.initial_pairs) {
      const int ba = (idx >> a) & 1, bb = (idx >> b) & 1;
      if (ba == bb) {
        ok = false;
        break;
      }
      if (ba == 0) sign = -sign;  // |down,up> component of the singlet
    }
    if (!ok) continue;
    for (int l = 0; l < n && ok; ++l)
      if (single_spin_of[l] >= 0 && ((idx >> l) & 1) != single_spin_of[l])
        ok = false;
    if (ok) sv.psi[idx] = sign * amp;
  }
}

}  // namespace

TubeState init_tube(const TubeConfig& config, Engine engine,
                    std::uint64_t tube_seed, int margin_cells) {
  config.validate();
  int margin = margin_cells >= 0 ? margin_cells : config.edge_margin_cells;
  if (margin < 0) margin = 1;

  TubeState state;
  state.config = config;
  state.engine = engine;
  state.margin_cells = margin;
  state.n_sites = 2 * (config.n_cells + 2 * margin);

  std::mt19937_64 layout_rng = rng::make_engine(tube_seed, 0);
  state.noise_rng = rng::make_engine(tube_seed, 1);
  const CellLayout layout = draw_layout(config, layout_rng);

  state.site_owner.assign(state.n_sites, -1);

  // place atoms in positional order so labels are ordered
  struct Placement {
    int site;
    int chirality;
    int pair_partner_slot;  // -1 single, else 0 = left member, 1 = right
    int spin;               // singles only
  };
  std::vector<Placement> placements;
  {
    std::size_t ip = 0, is = 0;
    for (int c = 0; c < config.n_cells; ++c) {
      const int left_site = 2 * (c + margin);
      if (ip < layout.pair_cells.size() && layout.pair_cells[ip] == c) {
        placements.push_back({left_site, -1, 0, -1});
        placements.push_back({left_site + 1, +1, 1, -1});
        ++ip;
      } else if (is < layout.singles.size() && layout.singles[is].first == c) {
        placements.push_back({left_site, -1, -1, layout.singles[is].second});
        ++is;
      }
    }
  }

  std::vector<int> single_spins;
  auto& ps = state.pair_sector;
  for (std::size_t l = 0; l < placements.size(); ++l) {
    const auto& p = placements[l];
    state.atoms.push_back({p.site, p.chirality, true});
    state.site_owner[p.site] = static_cast<int>(l);
    if (p.pair_partner_slot == 0)
      state.initial_pairs.emplace_back(static_cast<int>(l),
                                       static_cast<int>(l) + 1);
    if (p.pair_partner_slot < 0) single_spins.push_back(p.spin);
  }

  // token bookkeeping: pair i owns tokens (2i, 2i+1); singles follow
  const int n_pairs = static_cast<int>(state.initial_pairs.size());
  ps.pairs.resize(n_pairs);
  ps.token_owner.assign(state.atoms.size(), -1);
  ps.label_token.assign(state.atoms.size(), -1);
  for (int i = 0; i < n_pairs; ++i) {
    const auto [a, b] = state.initial_pairs[i];
    ps.pairs[i] = {2 * i, 2 * i + 1, 0.0, true};
    ps.token_owner[2 * i] = a;
    ps.token_owner[2 * i + 1] = b;
    ps.label_token[a] = 2 * i;
    ps.label_token[b] = 2 * i + 1;
  }
  {
    int next_token = 2 * n_pairs;
    for (std::size_t l = 0; l < state.atoms.size(); ++l)
      if (ps.label_token[l] < 0) {
        ps.label_token[l] = next_token;
        ps.token_owner[next_token] = static_cast<int>(l);
        ++next_token;
      }
  }

  if (engine == Engine::StateVector) build_state_vector(state, single_spins);
  return state;
}

// ---------------------------------------------------------------------------
// spin-sector primitives

namespace {

bool nearly_integer(double alpha) {
  return std::abs(alpha - std::round(alpha)) < kIntegerTol;
}

void pair_collide(TubeState& state, int label_a, int label_b, double alpha,
                  bool stochastic_allowed) {
  auto& ps = state.pair_sector;
  bool do_swap;
  if (nearly_integer(alpha)) {
    do_swap = (static_cast<long long>(std::llround(alpha)) % 2) != 0;
  } else if (stochastic_allowed) {
    // trajectory unraveling of the partial swap: collapse onto the swap or
    // identity branch with the Born probabilities |(1 -+ e^{i pi alpha})/2|^2
    const double p_swap = 0.5 * (1.0 - std::cos(M_PI * alpha));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    do_swap = uni(state.noise_rng) < p_swap;
  } else {
    std::ostringstream os;
    os << "pair-registry engine cannot represent (SWAP)^alpha with "
          "non-integer alpha = "
       << alpha << "; use the state-vector engine";
    throw UnsupportedGateError(os.str());
  }
  if (do_swap) {
    const int ta = ps.label_token[label_a];
    const int tb = ps.label_token[label_b];
    std::swap(ps.label_token[label_a], ps.label_token[label_b]);
    std::swap(ps.token_owner[ta], ps.token_owner[tb]);
  }
}

void sv_collide(TubeState& state, int label_a, int label_b, double alpha) {
  auto& sv = state.sv_sector;
  const cplx e = std::exp(kI * (M_PI * alpha));
  const cplx diag = 0.5 * (1.0 + e);
  const cplx off = 0.5 * (1.0 - e);
  const std::size_t mask_a = std::size_t{1} << label_a;
  const std::size_t mask_b = std::size_t{1} << label_b;
  const std::size_t dim = sv.psi.size();
  for (std::size_t idx = 0; idx < dim; ++idx) {
    if ((idx & mask_a) && !(idx & mask_b)) {
      const std::size_t jdx = idx ^ mask_a ^ mask_b;
      const cplx u = sv.psi[idx];
      const cplx v = sv.psi[jdx];
      sv.psi[idx] = diag * u + off * v;
      sv.psi[jdx] = off * u + diag * v;
    }
  }
}

double pair_singlet_sum(const TubeState& state, bool strict) {
  const auto& ps = state.pair_sector;
  double sum = 0.0;
  for (const auto& pr : ps.pairs) {
    if (!pr.alive) continue;
    const int la = ps.token_owner[pr.token_a];
    const int lb = ps.token_owner[pr.token_b];
    const int sep = std::abs(state.atoms[la].site - state.atoms[lb].site);
    if (sep != 1) {
      if (strict) {
        std::ostringstream os;
        os << "measure_singlet_fraction: pair carriers are " << sep
           << " sites apart; run the reverse pump before measuring";
        throw ProtocolOrderError(os.str());
      }
      continue;
    }
    sum += 0.5 * (1.0 + std::cos(pr.delta));
  }
  return sum;
}

double sv_singlet_sum(const TubeState& state, bool strict) {
  const auto& sv = state.sv_sector;
  double sum = 0.0;
  const std::size_t dim = sv.psi.size();
  for (auto [a, b] : state.initial_pairs) {
    const int sep = std::abs(state.atoms[a].site - state.atoms[b].site);
    if (sep != 1) {
      if (strict)
        throw ProtocolOrderError(
            "measure_singlet_fraction: pair labels are not adjacent; run the "
            "reverse pump before measuring");
      continue;
    }
    const std::size_t mask_a = std::size_t{1} << a;
    const std::size_t mask_b = std::size_t{1} << b;
    double p = 0.0;
    for (std::size_t idx = 0; idx < dim; ++idx) {
      if ((idx & mask_a) && !(idx & mask_b)) {
        const cplx amp = (sv.psi[idx] - sv.psi[idx ^ mask_a ^ mask_b]) /
                         std::sqrt(2.0);
        p += std::norm(amp);
      }
    }
    sum += p;
  }
  return sum;
}

int live_pair_count(const TubeState& state) {
  if (state.engine == Engine::StateVector)
    return static_cast<int>(state.initial_pairs.size());
  int n = 0;
  for (const auto& pr : state.pair_sector.pairs)
    if (pr.alive) ++n;
  return n;
}

void apply_survival(TubeState& state, const NoiseModel& noise) {
  if (noise.survival >= 1.0) return;
  if (state.engine == Engine::StateVector)
    throw UnsupportedGateError(
        "survival noise (atom loss) is not representable in the state-vector "
        "engine; use the pair-registry engine");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto& ps = state.pair_sector;
  for (std::size_t l = 0; l < state.atoms.size(); ++l) {
    auto& atom = state.atoms[l];
    if (!atom.alive) continue;
    if (uni(state.noise_rng) < noise.survival) continue;
    atom.alive = false;
    state.site_owner[atom.site] = -1;
    const int token = ps.label_token[l];
    if (token < 2 * static_cast<int>(ps.pairs.size()))
      ps.pairs[token / 2].alive = false;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// dynamics

void step_cycle(TubeState& state, const Layer& layer, int cycle_index,
                bool reverse, const NoiseModel& noise) {
  noise.validate();
  apply_survival(state, noise);

  // brick-wall parity: cycle 1 activates the inter-cell bonds (odd left site)
  const int parity = (cycle_index % 2 == 1) ? 1 : 0;

  double jitter = 0.0;
  if (noise.alpha_sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise.alpha_sigma);
    jitter = gauss(state.noise_rng);
  }

  for (int left = parity; left + 1 < state.n_sites; left += 2) {
    const int a = state.site_owner[left];
    const int b = state.site_owner[left + 1];
    if (a >= 0 && b >= 0) {
      double alpha = layer.alpha_for_bond(left) + jitter;
      if (reverse) alpha = -alpha;
      if (state.engine == Engine::PairRegistry)
        pair_collide(state, a, b, alpha, noise.alpha_sigma > 0.0);
      else
        sv_collide(state, a, b, alpha);
      state.atoms[a].chirality = -state.atoms[a].chirality;
      state.atoms[b].chirality = -state.atoms[b].chirality;
    } else if (a >= 0) {
      state.atoms[a].site = left + 1;
      state.site_owner[left + 1] = a;
      state.site_owner[left] = -1;
    } else if (b >= 0) {
      state.atoms[b].site = left;
      state.site_owner[left] = b;
      state.site_owner[left + 1] = -1;
    }
  }

  // boundary sites with no active partner: hold (default) or mirror-bounce
  if (state.config.boundary == TubeConfig::Boundary::Mirror) {
    auto mirror = [&state](int site) {
      const int l = state.site_owner[site];
      if (l >= 0) state.atoms[l].chirality = -state.atoms[l].chirality;
    };
    if (parity == 1) mirror(0);
    if ((state.n_sites - parity) % 2 == 1) mirror(state.n_sites - 1);
  }
}

void run_forward(TubeState& state, const Circuit& circuit,
                 const NoiseModel& noise) {
  for (int i = 0; i < circuit.depth(); ++i)
    step_cycle(state, circuit.layers[i], state.forward_cycles + i + 1, false,
               noise);
  state.forward_cycles += circuit.depth();
}

void run_reverse(TubeState& state, const Circuit& circuit,
                 const NoiseModel& noise) {
  if (state.forward_cycles < circuit.depth())
    throw ProtocolOrderError(
        "run_reverse: no matching forward history for this circuit depth");
  for (int i = circuit.depth() - 1; i >= 0; --i)
    step_cycle(state, circuit.layers[i],
               state.forward_cycles - circuit.depth() + i + 1, true, noise);
  state.forward_cycles -= circuit.depth();
}

void apply_gradient(TubeState& state, const STOSettings& sto, double tau_s) {
  sto.validate();
  if (tau_s == 0.0) return;
  const double center = state.center_site();

  if (state.engine == Engine::PairRegistry) {
    auto& ps = state.pair_sector;
    for (auto& pr : ps.pairs) {
      if (!pr.alive) continue;
      const double xa = state.atoms[ps.token_owner[pr.token_a]].site;
      const double xb = state.atoms[ps.token_owner[pr.token_b]].site;
      pr.delta += 2.0 * M_PI * sto.f1_hz * tau_s * (xa - xb);
    }
    return;
  }

  auto& sv = state.sv_sector;
  std::vector<double> phase(state.atoms.size(), 0.0);
  for (std::size_t l = 0; l < state.atoms.size(); ++l)
    if (state.atoms[l].alive)
      phase[l] = M_PI * sto.f1_hz * tau_s * (state.atoms[l].site - center);
  const std::size_t dim = sv.psi.size();
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double total = 0.0;
    for (std::size_t l = 0; l < state.atoms.size(); ++l)
      total += ((idx >> l) & 1) ? -phase[l] : phase[l];
    sv.psi[idx] *= std::exp(kI * total);
  }
}

std::optional<double> measure_singlet_fraction(const TubeState& state) {
  const int n = live_pair_count(state);
  if (n == 0) return std::nullopt;
  const double sum = state.engine == Engine::PairRegistry
                         ? pair_singlet_sum(state, true)
                         : sv_singlet_sum(state, true);
  return sum / n;
}

std::vector<int> pair_separations(const TubeState& state) {
  std::vector<int> seps;
  if (state.engine == Engine::PairRegistry) {
    const auto& ps = state.pair_sector;
    for (const auto& pr : ps.pairs) {
      if (!pr.alive) continue;
      const int la = ps.token_owner[pr.token_a];
      const int lb = ps.token_owner[pr.token_b];
      seps.push_back(std::abs(state.atoms[la].site - state.atoms[lb].site));
    }
  } else {
    for (auto [a, b] : state.initial_pairs)
      seps.push_back(std::abs(state.atoms[a].site - state.atoms[b].site));
  }
  return seps;
}

// ---------------------------------------------------------------------------
// ensemble protocol

EnsembleResult simulate_ensemble(const TubeConfig& config,
                                 const Circuit& circuit,
                                 const STOSettings& sto,
                                 const NoiseModel& noise, int n_tubes,
                                 Engine engine) {
  config.validate();
  sto.validate();
  noise.validate();
  if (n_tubes < 1) throw ConfigError("simulate_ensemble: n_tubes must be >= 1");

  const int margin = config.edge_margin_cells >= 0 ? config.edge_margin_cells
                                                   : circuit.depth() + 1;

  const std::size_t n_tau = sto.tau_s.size();

  // Tubes are independent work items; per-tube results are reduced in index
  // order afterwards so the output is identical for any thread count.
  struct TubeOut {
    int n_pairs = 0;
    std::vector<int> separations;
    std::vector<double> singlet_sum;
  };
  std::vector<TubeOut> per_tube(n_tubes);
  par::parallel_for(n_tubes, [&](int t) {
    const std::uint64_t tube_seed = rng::substream_seed(config.seed, t);
    TubeState frozen = init_tube(config, engine, tube_seed, margin);
    TubeOut& out = per_tube[t];
    out.n_pairs = live_pair_count(frozen);
    if (out.n_pairs == 0) return;

    run_forward(frozen, circuit, noise);
    out.separations = pair_separations(frozen);

    out.singlet_sum.resize(n_tau);
    for (std::size_t k = 0; k < n_tau; ++k) {
      TubeState probe = frozen;
      // each hold time is an independent experimental run: fresh noise stream
      probe.noise_rng = rng::make_engine(tube_seed, 1000000 + k);
      apply_gradient(probe, sto, sto.tau_s[k]);
      run_reverse(probe, circuit, noise);
      out.singlet_sum[k] = probe.engine == Engine::PairRegistry
                               ? pair_singlet_sum(probe, false)
                               : sv_singlet_sum(probe, false);
    }
  });

  std::vector<double> sum(n_tau, 0.0);
  std::vector<std::vector<double>> tube_fractions(n_tau);
  std::map<int, double> histogram;
  long total_initial_pairs = 0;
  double hist_weight = 0.0;
  for (const TubeOut& tube : per_tube) {
    if (tube.n_pairs == 0) continue;
    total_initial_pairs += tube.n_pairs;
    for (int s : tube.separations) {
      histogram[s] += 1.0;
      hist_weight += 1.0;
    }
    for (std::size_t k = 0; k < n_tau; ++k) {
      sum[k] += tube.singlet_sum[k];
      tube_fractions[k].push_back(tube.singlet_sum[k] / tube.n_pairs);
    }
  }

  EnsembleResult out;
  out.n_tubes = n_tubes;
  out.n_pairs = total_initial_pairs;
  out.trace.tau_s = sto.tau_s;
  out.trace.f1_hz = sto.f1_hz;
  out.trace.seed = config.seed;
  out.trace.value.assign(n_tau, std::numeric_limits<double>::quiet_NaN());
  out.trace.stderr_value.assign(n_tau, 0.0);
  if (total_initial_pairs > 0) {
    for (std::size_t k = 0; k < n_tau; ++k) {
      out.trace.value[k] = sum[k] / static_cast<double>(total_initial_pairs);
      const auto& f = tube_fractions[k];
      if (f.size() > 1) {
        const double mean =
            std::accumulate(f.begin(), f.end(), 0.0) / f.size();
        double var = 0.0;
        for (double x : f) var += (x - mean) * (x - mean);
        var /= static_cast<double>(f.size() - 1);
        out.trace.stderr_value[k] = std::sqrt(var / f.size());
      }
    }
  }
  for (auto& [s, w] : histogram) w /= hist_weight;
  out.histogram = histogram;
  return out;
}

AgreementReport engines_agree(const TubeConfig& config, const Circuit& circuit,
                              const STOSettings& sto) {
  auto trace_for = [&](Engine engine, const Circuit& circ) {
    std::vector<double> trace;
    const std::uint64_t tube_seed = rng::substream_seed(config.seed, 0);
    const int margin = config.edge_margin_cells >= 0
                           ? config.edge_margin_cells
                           : circ.depth() + 1;
    TubeState base = init_tube(config, engine, tube_seed, margin);
    if (static_cast<int>(base.atoms.size()) > 14)
      throw ConfigError("engines_agree: tube exceeds 14 atoms");
    run_forward(base, circ);
    for (double tau : sto.tau_s) {
      TubeState probe = base;
      apply_gradient(probe, sto, tau);
      run_reverse(probe, circ);
      const auto f = measure_singlet_fraction(probe);
      trace.push_back(f.value_or(1.0));
    }
    return trace;
  };

  AgreementReport report;
  const auto a = trace_for(Engine::PairRegistry, circuit);
  const auto b = trace_for(Engine::StateVector, circuit);
  for (std::size_t k = 0; k < a.size(); ++k)
    report.max_abs_diff = std::max(report.max_abs_diff, std::abs(a[k] - b[k]));
  report.agree = report.max_abs_diff <= 1e-10;
  if (!report.agree) {
    for (int d = 1; d <= circuit.depth(); ++d) {
      Circuit prefix = circuit;
      prefix.layers.resize(d);
      const auto pa = trace_for(Engine::PairRegistry, prefix);
      const auto pb = trace_for(Engine::StateVector, prefix);
      double diff = 0.0;
      for (std::size_t k = 0; k < pa.size(); ++k)
        diff = std::max(diff, std::abs(pa[k] - pb[k]));
      if (diff > 1e-10) {
        report.first_divergent_layer = d;
        break;
      }
    }
    std::ostringstream os;
    os << "engine traces diverge by " << report.max_abs_diff
       << " (first divergent layer " << report.first_divergent_layer << ")";
    report.detail = os.str();
  }
  return report;
}

// ---------------------------------------------------------------------------
// shuttle double occupancy

ShuttleSeries simulate_shuttle_double_occupancy(
    const lattice::ScheduleTable& schedule, double survival_per_cycle,
    int n_cyc, int reversal_cycle, const lattice::SolverOptions& opts) {
  if (!(survival_per_cycle > 0.0 && survival_per_cycle <= 1.0))
    throw ConfigError("shuttle: per-cycle survival must lie in (0, 1]");
  if (n_cyc < 0) throw ConfigError("shuttle: n_cyc must be >= 0");

  const lattice::Potential1D p1d = lattice::reduce_to_1d(schedule.potential);
  const auto d_of = [&](double tau_frac) {
    const double phi = schedule.pump.phase(tau_frac * schedule.pump.period_s);
    return lattice::orbital_double_occupancy(
        lattice::ground_orbital(lattice::solve_bloch(p1d, phi, opts)));
  };

  ShuttleSeries series;
  series.d_dimerised = d_of(0.0);    // balanced configuration
  series.d_staggered = d_of(0.25);   // quarter period away
  series.reversal_cycle = reversal_cycle;

  for (int half = 0; half <= 2 * n_cyc; ++half) {
    const double n = 0.5 * half;
    const bool staggered = (half % 2 == 0);
    const double d_cfg = staggered ? series.d_staggered : series.d_dimerised;
    series.n_cycles.push_back(n);
    series.staggered.push_back(staggered ? 1 : 0);
    series.occupancy.push_back(d_cfg *
                               std::pow(survival_per_cycle, 2.0 * n));
  }
  return series;
}

}  // namespace pumpkit::circuit
