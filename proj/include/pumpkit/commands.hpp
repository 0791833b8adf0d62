#pragma once

#include "pumpkit/config.hpp"

// CLI verb implementations. Each writes its artifacts into cfg.out_dir and
// returns the process exit code (0 on success); domain errors propagate as
// exceptions and are mapped to exit codes by the front end.
namespace pumpkit::io {

// Schedule table, Wannier-center winding, gate-angle scans and calibrated
// knob settings (schedule.csv/json, winding.json, alpha_vs_period.csv,
// alpha_vs_vx.csv, gates.json).
int cmd_calibrate(const ExperimentConfig& cfg);

// Ensemble protocol: forward circuit, gradient hold, time-reversed circuit,
// singlet readout (trace.csv, histogram.json; shuttle.csv when enabled).
int cmd_simulate(const ExperimentConfig& cfg);

// Multi-frequency fit and spectrum of trace.csv (fit_report.json,
// amplitudes.csv, spectrum.csv; decay.json from shuttle.csv when present).
int cmd_analyze(const ExperimentConfig& cfg);

// Combined summary of whatever artifacts exist (report.json, report.md);
// missing artifacts are listed rather than fatal.
int cmd_report(const ExperimentConfig& cfg);

}  // namespace pumpkit::io
