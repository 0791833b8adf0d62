#include "pumpkit/commands.hpp"

#include <fstream>
#include <sstream>

#include "pumpkit/analysis.hpp"
#include "pumpkit/errors.hpp"
#include "pumpkit/gates.hpp"

namespace pumpkit::io {

using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json_if_present(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return json();
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed artifact " + path.string() + ": " + e.what());
  }
}

json stamp(const ExperimentConfig& cfg) {
  return {{"tool", "pumpkit"},
          {"version", kVersion},
          {"config_hash", hash_hex(cfg.hash)}};
}

bool pump_off(const ExperimentConfig& cfg) {
  return cfg.potential.V_Xint == 0.0;
}

std::ofstream open_csv(const std::filesystem::path& path,
                       const ExperimentConfig& cfg, const char* header) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# pumpkit " << kVersion << "\n";
  out << "# config_hash=" << hash_hex(cfg.hash) << "\n";
  out << header << "\n";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// calibrate

int cmd_calibrate(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);

  const lattice::ScheduleTable table =
      lattice::build_schedule(cfg.potential, cfg.pump, cfg.hubbard_u,
                              cfg.solver);

  {
    auto csv = open_csv(cfg.out_dir / "schedule.csv", cfg,
                        "tau_frac,t_x,t_x_prime,delta,jex_erec,jex_hz");
    for (std::size_t i = 0; i < table.samples.size(); ++i) {
      const auto& s = table.samples[i];
      csv << format_double(s.tau_frac) << ',' << format_double(s.t_x) << ','
          << format_double(s.t_x_prime) << ',' << format_double(s.delta) << ','
          << format_double(table.jex[i]) << ','
          << format_double(table.jex[i] * table.erec_hz) << '\n';
    }
  }
  {
    json j = stamp(cfg);
    j["erec_hz"] = table.erec_hz;
    j["u_erec"] = table.U;
    j["max_jex_erec"] = table.max_jex();
    j["max_jex_hz"] = table.max_jex() * table.erec_hz;
    json rows = json::array();
    for (std::size_t i = 0; i < table.samples.size(); ++i) {
      const auto& s = table.samples[i];
      rows.push_back({{"tau_frac", s.tau_frac},
                      {"t_x", s.t_x},
                      {"t_x_prime", s.t_x_prime},
                      {"delta", s.delta},
                      {"jex_erec", table.jex[i]},
                      {"fit_residual", s.fit_residual}});
    }
    j["samples"] = rows;
    write_json(cfg.out_dir / "schedule.json", j);
  }

  {
    json j = stamp(cfg);
    const lattice::WindingReport w =
        lattice::wannier_center_winding(cfg.potential, cfg.pump, cfg.solver);
    j["band0_sites"] = w.band0_sites;
    j["band1_sites"] = w.band1_sites;
    j["min_relative_gap"] = w.min_relative_gap;
    if (pump_off(cfg))
      j["note"] = "pump off (v_xint = 0): no superlattice modulation, "
                  "winding is zero by construction";
    write_json(cfg.out_dir / "winding.json", j);
  }

  json gates_json = stamp(cfg);
  if (pump_off(cfg)) {
    // static lattice: no gate window exists, emit empty tables with a note
    gates_json["note"] =
        "pump off (v_xint = 0): no exchange window, gate tables are empty";
    gates_json["alpha_vs_period"] = json::array();
    gates_json["alpha_vs_vx"] = json::array();
    gates_json["calibrations"] = json::array();
    std::ofstream(cfg.out_dir / "alpha_vs_period.csv")
        << "# pumpkit " << kVersion << "\n# config_hash=" << hash_hex(cfg.hash)
        << "\n# pump off: empty\nperiod_s,alpha\n";
    std::ofstream(cfg.out_dir / "alpha_vs_vx.csv")
        << "# pumpkit " << kVersion << "\n# config_hash=" << hash_hex(cfg.hash)
        << "\n# pump off: empty\nv_x,alpha,max_jex_hz\n";
    write_json(cfg.out_dir / "gates.json", gates_json);
    return 0;
  }

  const double T0 = cfg.pump.period_s;
  const gates::GateAngle base =
      gates::gate_angle(table, -0.25 * T0, 0.25 * T0);

  {
    // the gate exponent is exactly linear in the pump period
    auto csv = open_csv(cfg.out_dir / "alpha_vs_period.csv", cfg,
                        "period_s,alpha");
    json rows = json::array();
    const auto& gs = cfg.gate_scan;
    for (int i = 0; i < gs.period_points; ++i) {
      const double f =
          gs.period_points == 1
              ? gs.period_lo_factor
              : gs.period_lo_factor + (gs.period_hi_factor - gs.period_lo_factor) *
                                          i / (gs.period_points - 1);
      const double T = f * T0;
      const double alpha = base.alpha() * f;
      csv << format_double(T) << ',' << format_double(alpha) << '\n';
      rows.push_back({{"period_s", T}, {"alpha", alpha}});
    }
    gates_json["alpha_vs_period"] = rows;
  }

  {
    auto csv = open_csv(cfg.out_dir / "alpha_vs_vx.csv", cfg,
                        "v_x,alpha,max_jex_hz");
    json rows = json::array();
    lattice::SolverOptions scan_opts = cfg.solver;
    lattice::PumpSchedule scan_pump = cfg.pump;
    scan_pump.n_samples = std::min(cfg.pump.n_samples, 96);
    const auto& gs = cfg.gate_scan;
    for (int i = 0; i < gs.vx_points; ++i) {
      lattice::LatticePotential pot = cfg.potential;
      pot.V_X = gs.vx_points == 1
                    ? gs.vx_lo
                    : gs.vx_lo + (gs.vx_hi - gs.vx_lo) * i / (gs.vx_points - 1);
      const lattice::ScheduleTable t =
          lattice::build_schedule(pot, scan_pump, cfg.hubbard_u, scan_opts);
      const double alpha =
          gates::gate_angle(t, -0.25 * T0, 0.25 * T0).alpha();
      csv << format_double(pot.V_X) << ',' << format_double(alpha) << ','
          << format_double(t.max_jex() * t.erec_hz) << '\n';
      rows.push_back({{"v_x", pot.V_X},
                      {"alpha", alpha},
                      {"max_jex_hz", t.max_jex() * t.erec_hz}});
    }
    gates_json["alpha_vs_vx"] = rows;
  }

  {
    json rows = json::array();
    const auto& gs = cfg.gate_scan;
    for (double target : gs.targets) {
      json row = {{"target_alpha", target}, {"knob", "pump_period"}};
      try {
        const gates::CalibrationResult r = gates::calibrate_gate(
            target, gates::Knob::PumpPeriod, cfg.potential, cfg.pump,
            cfg.hubbard_u, gs.period_lo_factor * T0, gs.period_hi_factor * T0,
            cfg.solver);
        row["period_s"] = r.knob_value;
        row["achieved_alpha"] = r.achieved_alpha;
      } catch (const CalibrationRangeError& e) {
        row["error"] = e.what();
      }
      rows.push_back(row);
    }
    gates_json["calibrations"] = rows;
  }
  gates_json["gate_window_alpha"] = base.alpha();
  gates_json["gate_window_phi"] = base.phi;
  write_json(cfg.out_dir / "gates.json", gates_json);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);

  circuit::EnsembleResult result = circuit::simulate_ensemble(
      cfg.tube, cfg.circ, cfg.sto, cfg.noise, cfg.n_tubes, cfg.engine);
  result.trace.metadata = "engine=" + std::string(cfg.engine ==
                                                          circuit::Engine::PairRegistry
                                                      ? "pair"
                                                      : "statevector") +
                          " n_tubes=" + std::to_string(cfg.n_tubes);
  write_trace_csv(cfg.out_dir / "trace.csv", result.trace, cfg.hash);

  {
    json j = stamp(cfg);
    j["n_tubes"] = result.n_tubes;
    j["n_pairs"] = result.n_pairs;
    json h = json::object();
    for (auto [s, w] : result.histogram) h[std::to_string(s)] = w;
    j["histogram"] = h;
    write_json(cfg.out_dir / "histogram.json", j);
  }

  if (cfg.shuttle.enabled) {
    const lattice::ScheduleTable table = lattice::build_schedule(
        cfg.potential, cfg.pump, cfg.hubbard_u, cfg.solver);
    const circuit::ShuttleSeries series =
        circuit::simulate_shuttle_double_occupancy(
            table, cfg.shuttle.survival, cfg.shuttle.n_cyc,
            cfg.shuttle.reversal_cycle, cfg.solver);
    auto csv = open_csv(cfg.out_dir / "shuttle.csv", cfg,
                        "n_cycles,occupancy,staggered");
    for (std::size_t i = 0; i < series.n_cycles.size(); ++i)
      csv << format_double(series.n_cycles[i]) << ','
          << format_double(series.occupancy[i]) << ',' << series.staggered[i]
          << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

namespace {

circuit::ShuttleSeries read_shuttle_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  circuit::ShuttleSeries series;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#' || line.rfind("n_cycles", 0) == 0)
      continue;
    std::istringstream is(line);
    std::string a, b, c;
    std::getline(is, a, ',');
    std::getline(is, b, ',');
    std::getline(is, c, ',');
    series.n_cycles.push_back(std::stod(a));
    series.occupancy.push_back(std::stod(b));
    series.staggered.push_back(std::stoi(c));
  }
  return series;
}

}  // namespace

int cmd_analyze(const ExperimentConfig& cfg) {
  const std::filesystem::path trace_path = cfg.out_dir / "trace.csv";
  if (!std::filesystem::exists(trace_path))
    throw MissingArtifactError("analyze needs " + trace_path.string() +
                               "; run simulate first");
  circuit::TimeTrace trace = read_trace_csv(trace_path);
  const double f1 = trace.f1_hz > 0.0 ? trace.f1_hz : cfg.sto.f1_hz;

  const analysis::MultiFreqFit fit = analysis::fit_multifreq(trace, f1);
  const analysis::Spectrum spec = analysis::fft_spectrum(trace, f1);

  {
    json j = stamp(cfg);
    j["input_hash"] = hash_hex(fit.input_hash);
    j["f1_hz"] = fit.f1_hz;
    j["s_max"] = fit.s_max;
    j["gamma"] = fit.gamma;
    j["gamma_err"] = fit.gamma_err;
    j["offset"] = fit.offset;
    j["offset_err"] = fit.offset_err;
    j["residual_norm"] = fit.residual_norm;
    j["iterations"] = fit.iterations;
    j["amplitude"] = fit.amplitude;
    j["amplitude_err"] = fit.amplitude_err;
    j["phase"] = fit.phase;
    j["phase_err"] = fit.phase_err;
    json peaks = json::array();
    for (std::size_t i = 0; i < spec.peak_freq_hz.size(); ++i)
      peaks.push_back(
          {{"freq_hz", spec.peak_freq_hz[i]}, {"s", spec.peak_s[i]}});
    j["spectrum_peaks"] = peaks;
    j["spectrum_resampled"] = spec.resampled;
    write_json(cfg.out_dir / "fit_report.json", j);
  }
  {
    auto csv = open_csv(cfg.out_dir / "amplitudes.csv", cfg,
                        "s,amplitude,amplitude_err,phase,phase_err");
    for (int s = 1; s <= fit.s_max; ++s)
      csv << s << ',' << format_double(fit.amplitude[s - 1]) << ','
          << format_double(fit.amplitude_err[s - 1]) << ','
          << format_double(fit.phase[s - 1]) << ','
          << format_double(fit.phase_err[s - 1]) << '\n';
  }
  {
    auto csv = open_csv(cfg.out_dir / "spectrum.csv", cfg,
                        "freq_hz,freq_f1,magnitude");
    for (std::size_t i = 0; i < spec.freq_hz.size(); ++i)
      csv << format_double(spec.freq_hz[i]) << ','
          << format_double(spec.freq_f1.empty() ? 0.0 : spec.freq_f1[i]) << ','
          << format_double(spec.magnitude[i]) << '\n';
  }

  const std::filesystem::path shuttle_path = cfg.out_dir / "shuttle.csv";
  if (std::filesystem::exists(shuttle_path)) {
    const circuit::ShuttleSeries series = read_shuttle_csv(shuttle_path);
    std::vector<double> n, d;
    for (std::size_t i = 0; i < series.n_cycles.size(); ++i) {
      if (series.staggered[i]) {  // one configuration: clean envelope
        n.push_back(series.n_cycles[i]);
        d.push_back(series.occupancy[i]);
      }
    }
    const analysis::DecayFit decay = analysis::fit_exponential_decay(n, d);
    json j = stamp(cfg);
    j["beta_cycles"] = decay.beta;
    j["beta_err"] = decay.beta_err;
    j["d0"] = decay.d0;
    j["fidelity"] = analysis::fidelity_from_beta(decay.beta);
    write_json(cfg.out_dir / "decay.json", j);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);

  const std::vector<std::string> artifact_names{
      "schedule.json", "winding.json",    "gates.json", "trace.csv",
      "histogram.json", "fit_report.json", "decay.json"};
  std::vector<std::string> present, missing;
  for (const std::string& name : artifact_names)
    (std::filesystem::exists(cfg.out_dir / name) ? present : missing)
        .push_back(name);

  const json winding = read_json_if_present(cfg.out_dir / "winding.json");
  const json gates_j = read_json_if_present(cfg.out_dir / "gates.json");
  const json histogram = read_json_if_present(cfg.out_dir / "histogram.json");
  const json fit = read_json_if_present(cfg.out_dir / "fit_report.json");
  const json schedule = read_json_if_present(cfg.out_dir / "schedule.json");
  const json decay = read_json_if_present(cfg.out_dir / "decay.json");

  json report = stamp(cfg);
  report["config"] = cfg.canonical();
  report["artifacts_present"] = present;
  report["artifacts_missing"] = missing;

  if (!winding.is_null())
    report["winding"] = {{"band0_sites", winding.value("band0_sites", 0.0)},
                         {"band1_sites", winding.value("band1_sites", 0.0)}};
  if (!schedule.is_null())
    report["schedule"] = {{"max_jex_hz", schedule.value("max_jex_hz", 0.0)},
                          {"u_erec", schedule.value("u_erec", 0.0)}};
  if (!gates_j.is_null() && gates_j.contains("calibrations"))
    report["calibrations"] = gates_j["calibrations"];
  if (!fit.is_null())
    report["fit"] = {{"gamma", fit.value("gamma", 0.0)},
                     {"offset", fit.value("offset", 0.0)},
                     {"residual_norm", fit.value("residual_norm", 0.0)}};
  if (!decay.is_null())
    report["shuttle"] = {{"beta_cycles", decay.value("beta_cycles", 0.0)},
                         {"fidelity", decay.value("fidelity", 0.0)}};

  // per-harmonic comparison: transport histogram weight vs fitted amplitude
  json comparison = json::array();
  if (!histogram.is_null() && !fit.is_null() && fit.contains("amplitude")) {
    const auto amps = fit["amplitude"].get<std::vector<double>>();
    double amp_total = 0.0;
    for (double a : amps) amp_total += a;
    for (auto it = histogram["histogram"].begin();
         it != histogram["histogram"].end(); ++it) {
      const int s = std::stoi(it.key());
      json row = {{"separation", s}, {"histogram_weight", it.value()}};
      if (s >= 1 && s <= static_cast<int>(amps.size())) {
        row["fit_amplitude"] = amps[s - 1];
        row["fit_amplitude_share"] =
            amp_total > 0.0 ? amps[s - 1] / amp_total : 0.0;
      }
      comparison.push_back(row);
    }
  }
  report["histogram_vs_fit"] = comparison;
  write_json(cfg.out_dir / "report.json", report);

  std::ofstream md(cfg.out_dir / "report.md");
  if (!md) throw ConfigError("cannot write report.md");
  md << "# pumpkit report\n\n";
  md << "- version: " << kVersion << "\n";
  md << "- config hash: `" << hash_hex(cfg.hash) << "`\n";
  md << "- seed: " << cfg.tube.seed << "\n\n";
  if (!missing.empty()) {
    md << "## Missing artifacts\n\n";
    for (const std::string& name : missing) md << "- " << name << "\n";
    md << "\n";
  }
  if (!winding.is_null()) {
    md << "## Pump topology\n\n";
    md << "- ground-band displacement: " << winding.value("band0_sites", 0.0)
       << " sites/period\n";
    md << "- first-excited displacement: " << winding.value("band1_sites", 0.0)
       << " sites/period\n";
    if (winding.contains("note"))
      md << "- note: " << winding["note"].get<std::string>() << "\n";
    md << "\n";
  }
  if (!gates_j.is_null() && gates_j.contains("calibrations")) {
    md << "## Gate calibrations\n\n";
    md << "| target alpha | pump period (s) | achieved |\n";
    md << "|---|---|---|\n";
    for (const json& row : gates_j["calibrations"]) {
      md << "| " << row.value("target_alpha", 0.0) << " | ";
      if (row.contains("period_s"))
        md << row["period_s"].get<double>() << " | "
           << row.value("achieved_alpha", 0.0);
      else
        md << "out of range | -";
      md << " |\n";
    }
    md << "\n";
  }
  if (!comparison.empty()) {
    md << "## Transport histogram vs fitted amplitudes\n\n";
    md << "| separation | histogram weight | fitted amplitude share |\n";
    md << "|---|---|---|\n";
    for (const json& row : comparison) {
      md << "| " << row["separation"].get<int>() << " | "
         << row["histogram_weight"].get<double>() << " | ";
      if (row.contains("fit_amplitude_share"))
        md << row["fit_amplitude_share"].get<double>();
      else
        md << "-";
      md << " |\n";
    }
    md << "\n";
  }
  if (!fit.is_null()) {
    md << "## Trace fit\n\n";
    md << "- damping gamma: " << fit.value("gamma", 0.0) << " 1/s\n";
    md << "- offset: " << fit.value("offset", 0.0) << "\n";
    md << "- residual norm: " << fit.value("residual_norm", 0.0) << "\n\n";
  }
  if (!decay.is_null()) {
    md << "## Shuttle decay\n\n";
    md << "- beta: " << decay.value("beta_cycles", 0.0) << " cycles\n";
    md << "- transfer fidelity: " << decay.value("fidelity", 0.0) << "\n\n";
  }
  return 0;
}

}  // namespace pumpkit::io
