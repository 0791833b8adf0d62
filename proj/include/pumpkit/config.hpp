#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pumpkit/circuit.hpp"
#include "pumpkit/lattice.hpp"

// Configuration loading and artifact serialization for the command-line
// front end. Configs are accepted as JSON or as an INI/TOML-like
// "[section] key = value" file; both are reduced to one canonical JSON form
// whose FNV-1a hash is embedded in every output artifact.
namespace pumpkit::io {

inline constexpr const char* kVersion = "1.0.0";

struct ShuttleSettings {
  bool enabled = false;
  double survival = 1.0;  // per atom per operation cycle
  int n_cyc = 100;
  int reversal_cycle = -1;
};

struct GateScanSettings {
  double vx_lo = 4.555;  // E_rec
  double vx_hi = 8.40;
  int vx_points = 9;
  double period_lo_factor = 0.1;  // pump-period scan, units of pump.period_s
  double period_hi_factor = 3.0;
  int period_points = 11;
  std::vector<double> targets{0.5, 1.0, 1.5, 2.0};  // calibration targets
};

struct ExperimentConfig {
  lattice::LatticePotential potential;
  lattice::PumpSchedule pump;
  lattice::SolverOptions solver;
  double hubbard_u = 2.5;          // E_rec
  double delta_updown_hz = 216.5;  // gradient splitting for state preparation

  circuit::Circuit circ;
  circuit::TubeConfig tube;
  circuit::NoiseModel noise;
  circuit::STOSettings sto;  // materialized hold-time grid
  double tau_max_s = 6e-3;
  int n_tau = 181;
  int n_tubes = 200;
  circuit::Engine engine = circuit::Engine::PairRegistry;

  GateScanSettings gate_scan;
  ShuttleSettings shuttle;

  std::filesystem::path out_dir = "out";
  std::uint64_t hash = 0;  // FNV-1a of the canonical JSON text

  // Canonical JSON form (sorted keys); re-parsing it reproduces this config
  // and the same hash.
  nlohmann::json canonical() const;
};

// Loads and validates a config. CLI overrides are applied before hashing so
// artifacts always record the effective configuration.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = {},
                             std::optional<std::string> out_override = {});

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = ".");

// Circuit description file:
//   {"layers": [{"alpha": 1.0, "bonds": {"12": 2.0}}, ...],
//    "period_s": 5e-3, "direction": 1}
// A bare array of numbers is shorthand for uniform layers.
circuit::Circuit load_circuit_file(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

// Shortest-round-trip decimal text for a double (deterministic CSV cells).
std::string format_double(double x);

// Trace CSV: "# pumpkit <version>", "# config_hash=...", metadata comments,
// then "tau_s,value,stderr" rows.
void write_trace_csv(const std::filesystem::path& path,
                     const circuit::TimeTrace& trace, std::uint64_t config_hash);
circuit::TimeTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace pumpkit::io
