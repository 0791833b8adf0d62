#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pumpkit/circuit.hpp"  // TimeTrace

// Spectral and regression analysis of singlet-fraction traces.
namespace pumpkit::analysis {

using circuit::TimeTrace;

// FNV-1a over the trace samples and metadata; recorded in every fit result
// so reports are reproducible bit-exactly from their inputs.
std::uint64_t trace_hash(const TimeTrace& trace);

struct MultiFreqFit {
  double f1_hz = 0.0;  // fixed input, not fitted
  int s_max = 12;
  std::vector<double> amplitude;      // A_s >= 0, s = 1..s_max
  std::vector<double> phase;          // theta_s
  std::vector<double> amplitude_err;
  std::vector<double> phase_err;
  double gamma = 0.0, gamma_err = 0.0;   // shared damping rate (1/s)
  double offset = 0.0, offset_err = 0.0; // F0
  Eigen::MatrixXd covariance;  // internal (Gamma, F0, P_s, Q_s) order
  double residual_norm = 0.0;
  int iterations = 0;
  std::uint64_t input_hash = 0;

  double model(double tau_s) const;
};

// Nonlinear least squares of
//   F(tau) = exp(-Gamma tau) sum_s A_s sin(2 pi s f1 tau + theta_s) + F0
// with f1 fixed from independent calibration. Internally parameterized in
// (P_s, Q_s) = A_s (cos theta_s, sin theta_s), which makes the model linear
// in everything but Gamma and removes the phase degeneracies.
MultiFreqFit fit_multifreq(const TimeTrace& trace, double f1_hz,
                           int s_max = 12);

struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> freq_f1;  // same axis in units of f1 (when given)
  std::vector<double> magnitude;
  double f1_hz = 0.0;
  bool resampled = false;
  std::vector<double> peak_freq_hz;  // dominant peaks, descending magnitude
  std::vector<int> peak_s;           // nearest integer multiple of f1
  std::uint64_t input_hash = 0;
};

// Zero-padded radix-2 magnitude spectrum; non-uniform traces are resampled
// with linear interpolation first (flagged in the result).
Spectrum fft_spectrum(const TimeTrace& trace, double f1_hz = 0.0);

struct BaseFrequencyFit {
  double f1_hz = 0.0;
  double stderr_hz = 0.0;
};

// Proportional fit frequency = (2 N + 1) f1 over (N_cyc, frequency) points.
BaseFrequencyFit fit_base_frequency(
    const std::vector<std::pair<int, double>>& points);

struct DecayFit {
  double beta = 0.0;  // decay constant of D = D0 exp(-N / beta)
  double beta_err = 0.0;
  double d0 = 0.0;
  double d0_err = 0.0;
};

// Least squares on D = D0 exp(-N/beta); a constant series reports
// beta = infinity rather than an error.
DecayFit fit_exponential_decay(const std::vector<double>& n,
                               const std::vector<double>& d);

// F = sqrt(exp(-1/beta)); the square root accounts for the two atoms lost
// per vanished double occupancy.
double fidelity_from_beta(double beta);

struct SingleSineFit {
  double freq_hz = 0.0;
  double freq_err_hz = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double gamma = 0.0;
  double offset = 0.0;
  bool amplitude_undetermined = false;  // flat trace: frequency meaningless
  std::uint64_t input_hash = 0;
};

// Damped single-sine fit with the frequency free; requires one dominant
// spectral component (FFT peak-to-sidelobe >= 3), otherwise raises and
// advises fit_multifreq.
SingleSineFit fit_single_sine(const TimeTrace& trace);

}  // namespace pumpkit::analysis
