#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "pumpkit/units.hpp"

// 1D superlattice band structure along the pump cycle: plane-wave Bloch
// solver, two-band Wannier construction, Rice-Mele parameter extraction,
// Wannier-center winding and orbital double-occupancy weights.
//
// Unit conventions used throughout:
//   * energies in E_rec = h^2/(2 m lambda^2)
//   * lengths in lattice sites (site spacing d = lambda/2, two sites per cell)
//   * quasimomentum as the fraction q in [-1/2, 1/2) of the cell reciprocal
//     vector k = 2*pi/lambda
//   * the position axis is oriented so that a forward phase ramp
//     (phi_SL increasing) displaces the ground band by +2 sites per period
namespace pumpkit::lattice {

struct LatticePotential {
  double V_X = 0.0;     // short lattice depth, E_rec
  double V_Xint = 0.0;  // interference lattice depth, E_rec
  double V_Z = 0.0;     // transverse depth entering the moving-lattice amplitude
  double I_XZ = 0.777;  // imbalance between the two moving-lattice terms
  double theta = M_PI;  // phase offset of the short lattice
  double lambda_m = units::default_lambda_m;

  void validate() const;  // throws ConfigError naming the offending field
};

// Effective 1D potential at the z = 0 antinode:
//   V(x) = -short_x  cos^2(kx + theta/2)
//          -short_int cos^2(kx)
//          -long_plus  cos(kx + phi_SL)
//          -long_minus cos(kx - phi_SL)
struct Potential1D {
  double short_x = 0.0;
  double theta = M_PI;
  double short_int = 0.0;
  double long_plus = 0.0;
  double long_minus = 0.0;
  double lambda_m = units::default_lambda_m;

  // Fourier coefficient c_n of V(x) = sum_n c_n exp(i n k x) at phase phi.
  std::complex<double> fourier(int n, double phi_sl) const;
};

Potential1D reduce_to_1d(const LatticePotential& pot);

struct PumpSchedule {
  double period_s = 5e-3;
  double phi0 = 0.0;   // superlattice phase at tau = 0 (0 = balanced point)
  int direction = +1;  // +1 forward, -1 reverse
  int n_samples = 256;

  void validate() const;
  double phase(double tau_s) const {
    return phi0 + direction * 2.0 * M_PI * tau_s / period_s;
  }
};

struct SolverOptions {
  int max_harmonic = 12;  // plane waves exp(i n k x), n = -max..max
  int n_q = 64;           // quasimomentum grid points over the cell BZ
  int n_bands = 2;
};

struct BandSolution {
  Eigen::VectorXd q;       // fractional quasimomentum, n_q values in [-1/2, 1/2)
  Eigen::MatrixXd energy;  // n_q x n_bands, E_rec, nondecreasing per row
  std::vector<Eigen::MatrixXcd> states;  // per q: (2*max_harmonic+1) x n_bands
  int max_harmonic = 0;
  double phi_sl = 0.0;
};

BandSolution solve_bloch(const Potential1D& pot, double phi_sl,
                         const SolverOptions& opts = {});

// Max absolute change of the retained band energies when the plane-wave
// cutoff doubles (convergence diagnostic).
double band_convergence(const Potential1D& pot, double phi_sl,
                        const SolverOptions& opts = {});

struct RiceMeleSample {
  double tau_frac = 0.0;   // tau / T
  double t_x = 0.0;        // intra-cell bond tunnelling, E_rec
  double t_x_prime = 0.0;  // inter-cell bond tunnelling, E_rec
  double delta = 0.0;      // half the staggered site-energy difference, E_rec
  double fit_residual = 0.0;  // relative RMS misfit of the dispersion
};

// Tight-binding parameters of the two lowest bands. The two-band subspace is
// Wannierized (parallel-transport gauge); the couplings are then polished by
// a closed-form dispersion fit and the residual against the Rice-Mele
// dispersion is reported. Throws ModelMismatchError if the residual exceeds
// the model tolerance.
RiceMeleSample extract_tight_binding(const BandSolution& bands);

// Least-squares fit of the half-gap dispersion
//   E_gap(q)/2 = sqrt(delta^2 + t^2 + t'^2 + 2 t t' cos(2 pi q))
// with delta held fixed; returns (t_x, t_x_prime) with t_x >= t_x_prime and
// the relative RMS residual.
struct DispersionFit {
  double t_x = 0.0;
  double t_x_prime = 0.0;
  double residual = 0.0;
};
DispersionFit fit_rice_mele_dispersion(const Eigen::VectorXd& q_frac,
                                       const Eigen::VectorXd& half_gap,
                                       double delta);

struct ScheduleTable {
  LatticePotential potential;
  PumpSchedule pump;
  double U = 0.0;  // E_rec
  std::vector<RiceMeleSample> samples;
  std::vector<double> jex;  // E_rec, same grid as samples
  double erec_hz = 0.0;     // E_rec / h conversion for the CLI boundary

  double max_jex() const;
};

// Samples the Rice-Mele parameters and the superexchange energy over one
// pump period. J_ex at each instant uses the active (stronger) bond.
ScheduleTable build_schedule(const LatticePotential& pot,
                             const PumpSchedule& pump, double U,
                             const SolverOptions& opts = {});

struct WindingReport {
  double band0_sites = 0.0;  // ground-band displacement per period, sites
  double band1_sites = 0.0;
  double min_relative_gap = 0.0;  // min gap / two-band bandwidth over the cycle
};

// Tracks the Zak phase of each of the two lowest bands over one pump period.
// Throws TopologyUndefinedError when the two-band gap closes along the cycle.
WindingReport wannier_center_winding(const LatticePotential& pot,
                                     const PumpSchedule& pump,
                                     const SolverOptions& opts = {},
                                     int n_tau = 128);

struct WannierOrbital {
  Eigen::VectorXd site_weights;  // probability per site, sums to 1
  double center_sites = 0.0;     // first moment on the same site axis
  int band = 0;
};

// Maximally localized (parallel-transport gauge) ground-band Wannier orbital,
// resolved on the site grid of the cell chain.
WannierOrbital ground_orbital(const BandSolution& bands);

// Double occupancy of two atoms sharing one orbital in the U = 0 regime.
double orbital_double_occupancy(const WannierOrbital& orbital);

}  // namespace pumpkit::lattice
