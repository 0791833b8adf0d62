#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pumpkit/lattice.hpp"

// Brick-wall pump circuits on ensembles of 1D tubes.
//
// Interpretation implemented (one rule covering both of the paper's views):
// positions follow deterministic hard-core trajectories -- in every active
// double well a lone atom crosses, two atoms bounce -- while the spin sector
// receives (SWAP)^alpha on each collision. SWAP therefore acts as a
// transparent crossing and (SWAP)^2 as a reflection.
namespace pumpkit::circuit {

struct TubeConfig {
  int n_cells = 32;       // loaded region, unit cells (2 sites each)
  double filling = 0.65;  // probability a cell hosts a singlet pair
  std::uint64_t seed = 1;
  enum class Boundary { Hold, Mirror } boundary = Boundary::Hold;
  // Empty cells beyond the loaded region on each side; -1 sizes the margin
  // from the circuit depth so bulk physics never touches the hard walls.
  int edge_margin_cells = -1;
  double singles_fraction = 0.0;  // lone atoms (random spin) in empty cells

  void validate() const;
};

struct Layer {
  double alpha = 1.0;
  std::map<int, double> bond_alpha;  // per-bond override, key = left site

  double alpha_for_bond(int left_site) const {
    auto it = bond_alpha.find(left_site);
    return it == bond_alpha.end() ? alpha : it->second;
  }
};

struct Circuit {
  std::vector<Layer> layers;  // one gate layer per operation cycle
  double period_s = 5e-3;     // pump period (two operation cycles)
  int direction = +1;

  int depth() const { return static_cast<int>(layers.size()); }
  static Circuit uniform(const std::vector<double>& alphas);
};

struct STOSettings {
  double f1_hz = 216.5;        // base frequency per site of separation
  std::vector<double> tau_s;   // hold times

  void validate() const;
};

struct NoiseModel {
  double alpha_sigma = 0.0;  // Gaussian gate-exponent jitter, per layer per tube
  double survival = 1.0;     // per-atom per-cycle survival probability

  bool noiseless() const { return alpha_sigma == 0.0 && survival == 1.0; }
  void validate() const;
};

struct AtomRecord {
  int site = -1;
  int chirality = 0;  // -1 left-moving, +1 right-moving bookkeeping
  bool alive = true;
};

enum class Engine { PairRegistry, StateVector };

// Pair registry: exact for circuits whose gates reduce to label permutations
// (integer alpha). Each pair keeps one accumulated STO phase; tokens track
// which label currently carries which pair member.
struct PairSpinSector {
  struct PairEntry {
    int token_a = -1, token_b = -1;  // immutable token ids
    double delta = 0.0;              // accumulated STO phase
    bool alive = true;
  };
  std::vector<PairEntry> pairs;
  std::vector<int> token_owner;  // token -> label
  std::vector<int> label_token;  // label -> token (-1 none)
};

// Full 2^N spin state over atom labels; handles arbitrary alpha.
struct StateVectorSpinSector {
  int n_atoms = 0;
  Eigen::VectorXcd psi;
};

struct TubeState {
  TubeConfig config;
  Engine engine = Engine::PairRegistry;
  int n_sites = 0;
  int margin_cells = 0;
  std::vector<AtomRecord> atoms;  // indexed by label in positional order
  std::vector<int> site_owner;    // site -> label, -1 empty
  std::vector<std::pair<int, int>> initial_pairs;  // label pairs
  PairSpinSector pair_sector;
  StateVectorSpinSector sv_sector;
  std::mt19937_64 noise_rng;
  int forward_cycles = 0;  // brick-wall parity bookkeeping

  int atom_count() const;
  double center_site() const { return 0.5 * (n_sites - 1); }
};

// Builds a tube: each loaded cell hosts a singlet pair with probability
// `filling` (left atom chirality -1, right +1). margin_cells < 0 uses
// config.edge_margin_cells, and -1 there means "caller sizes it".
TubeState init_tube(const TubeConfig& config, Engine engine,
                    std::uint64_t tube_seed, int margin_cells = -1);

// One operation cycle. Cycle indices are 1-based; cycle 1 activates the
// bonds between unit cells, alternating parity thereafter. With
// reverse = true the layer applies inverse gates (U_{-alpha}).
void step_cycle(TubeState& state, const Layer& layer, int cycle_index,
                bool reverse = false, const NoiseModel& noise = {});

void run_forward(TubeState& state, const Circuit& circuit,
                 const NoiseModel& noise = {});

// Frozen-lattice gradient hold: pair at separation s oscillates at s * f1.
void apply_gradient(TubeState& state, const STOSettings& sto, double tau_s);

// Inverse circuit: reversed layer order, inverse gates, reversed transport.
void run_reverse(TubeState& state, const Circuit& circuit,
                 const NoiseModel& noise = {});

// Strict protocol measurement: every live pair must sit on adjacent sites
// (throws ProtocolOrderError otherwise). nullopt when the tube holds no pairs.
std::optional<double> measure_singlet_fraction(const TubeState& state);

// Positional separation of every live pair (pair engine: current carriers).
std::vector<int> pair_separations(const TubeState& state);

struct TimeTrace {
  std::vector<double> tau_s;
  std::vector<double> value;
  std::vector<double> stderr_value;
  double f1_hz = 0.0;
  std::uint64_t seed = 0;
  std::string metadata;
};

struct EnsembleResult {
  TimeTrace trace;
  std::map<int, double> histogram;  // separation -> normalized weight
  long n_pairs = 0;
  int n_tubes = 0;
};

// Full protocol per tube and hold time: forward -> freeze+gradient ->
// reverse -> measure; averages over tubes. With survival noise a lost atom
// removes its pair from the numerator while the denominator keeps the
// initial pair count (the paper normalizes by initial double occupancy).
EnsembleResult simulate_ensemble(const TubeConfig& config,
                                 const Circuit& circuit,
                                 const STOSettings& sto,
                                 const NoiseModel& noise = {},
                                 int n_tubes = 1,
                                 Engine engine = Engine::PairRegistry);

struct AgreementReport {
  bool agree = false;
  double max_abs_diff = 0.0;
  int first_divergent_layer = -1;  // -1 when agreeing
  std::string detail;
};

// Runs the identical tube through both engines and compares the traces to
// 1e-10; on disagreement bisects over circuit prefixes for the first
// divergent layer. Requires <= 14 atoms and integer alpha.
AgreementReport engines_agree(const TubeConfig& config, const Circuit& circuit,
                              const STOSettings& sto);

struct ShuttleSeries {
  std::vector<double> n_cycles;   // 0, 0.5, 1, ... (operation cycles)
  std::vector<double> occupancy;  // D(n)
  std::vector<int> staggered;     // 1 = staggered sample, 0 = dimerised
  double d_staggered = 0.0;       // configuration values from the orbital
  double d_dimerised = 0.0;
  int reversal_cycle = -1;
};

// U = 0 shuttle: D(n) = D_config(n) * F^(2n), sampling the ground-orbital
// double occupancy at the staggered (integer n) and dimerised (half-integer)
// configurations; the reversal point only flips the transport direction and
// leaves the envelope unchanged.
ShuttleSeries simulate_shuttle_double_occupancy(
    const lattice::ScheduleTable& schedule, double survival_per_cycle,
    int n_cyc, int reversal_cycle = -1,
    const lattice::SolverOptions& opts = {});

}  // namespace pumpkit::circuit
