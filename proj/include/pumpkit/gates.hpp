#pragma once

#include <Eigen/Dense>
#include <complex>

#include "pumpkit/lattice.hpp"

// Double-well Hubbard physics and the two-particle Bloch sphere.
//
// Bloch-sphere convention (the single place it is defined; everything else
// follows from standard Pauli algebra in the ordered {|s>, |t>} basis):
//   * |s> sits at +z, |t> at -z
//   * |up,down>   = (|s> + |t>)/sqrt(2)   (+x)
//   * |down,up>   = (|t> - |s>)/sqrt(2)   (-x)
//   * |i_minus>   = (|s> - i|t>)/sqrt(2)  (-y), |i_plus> = (|s> + i|t>)/sqrt(2)
//   * superexchange H_eff = J_ex sigma_z / 2, gradient H_STO = D_ud sigma_x / 2
// The product-state labels differ from one of the paper's appendix variants by
// a global spin flip; the convention above is the one that makes the
// preparation chain |s> -> R_x(pi/2) -> |i_minus> -> R_z(pi/2) -> |up,down>
// and the sigma_y protocol exact simultaneously.
namespace pumpkit::gates {

struct DoubleWellParams {
  double t_x = 0.0;    // tunnelling, energy units
  double delta = 0.0;  // site offset (half the site-energy difference)
  double U = 0.0;      // on-site interaction

  void validate() const;  // U > 0 required
};

// 4x4 double-well Hamiltonian over {|ud,0>, |u,d>, |d,u>, |0,ud>}.
Eigen::Matrix4d dw_hamiltonian(const DoubleWellParams& p);

// Superexchange energy from the full 4x4 spectrum: E1 - E0.
double jex_exact(const DoubleWellParams& p);

// Second-order result 4 t^2 / (U (1 - (2 delta / U)^2)); requires U > 2|delta|.
double jex_perturbative(const DoubleWellParams& p);

struct GateAngle {
  double phi = 0.0;  // radians
  double alpha() const { return phi / M_PI; }
};

// phi = (1/hbar) * integral of J_ex over [tau_start, tau_end] (seconds).
// The schedule is periodic; windows may wrap across tau = 0 (the default gate
// window is -T/4..T/4 around the balanced configuration) but must not span
// more than one period. Quadrature integrates the composite-Simpson
// piecewise-quadratic interpolant of the table exactly, so the result is
// additive over any window partition to machine precision.
GateAngle gate_angle(const lattice::ScheduleTable& schedule, double tau_start_s,
                     double tau_end_s);

using GateUnitary = Eigen::Matrix4cd;

// (SWAP)^alpha over {|uu>, |ud>, |du>, |dd>}: identity on aligned spins,
// inner block entries (1 +- e^{i pi alpha})/2.
GateUnitary swap_alpha_unitary(double alpha);

enum class Knob { PumpPeriod, DepthVX };

struct CalibrationResult {
  double knob_value = 0.0;
  double achieved_alpha = 0.0;
};

// Bisection on alpha(knob) - target over [knob_lo, knob_hi] after a
// monotonicity pre-check; |alpha - target| < 1e-4 at the returned knob.
// Throws CalibrationRangeError when the target is not bracketed, listing the
// achievable alpha span.
CalibrationResult calibrate_gate(double target_alpha, Knob knob,
                                 const lattice::LatticePotential& pot,
                                 const lattice::PumpSchedule& pump, double U,
                                 double knob_lo, double knob_hi,
                                 const lattice::SolverOptions& opts = {});

enum class Basis { SingletTriplet, UpDown };

struct TwoSpinState {
  Eigen::Vector2cd amp{1.0, 0.0};
  Basis basis = Basis::SingletTriplet;

  TwoSpinState in_basis(Basis target) const;
  // population of |s> regardless of the stored basis
  double singlet_probability() const;
};

// named states (SingletTriplet basis)
TwoSpinState singlet_state();
TwoSpinState triplet_state();
TwoSpinState up_down_state();
TwoSpinState down_up_state();
TwoSpinState i_minus_state();
TwoSpinState i_plus_state();

struct TwoSpinHamiltonian {
  double jex_hz = 0.0;           // J_ex / h
  double delta_updown_hz = 0.0;  // D_ud / h
};

// Exact 2x2 evolution exp(-i (2 pi) (jex sigma_z + D_ud sigma_x) tau / 2)
// in the {|s>, |t>} basis.
TwoSpinState evolve_two_spin(const TwoSpinState& state,
                             const TwoSpinHamiltonian& h, double duration_s);

struct PreparationResult {
  TwoSpinState state;
  double fidelity = 0.0;  // |<up,down|psi>|^2
  double gradient_angle = 0.0;
  double pump_angle = 0.0;
};

// Product-state preparation protocol: gradient pulse (x rotation), then a
// quarter-cycle pump window (z rotation integrated from the schedule).
// Mis-set pulses reduce the reported fidelity instead of raising.
PreparationResult prepare_product_state(const lattice::ScheduleTable& schedule,
                                        double delta_updown_hz,
                                        double gradient_pulse_s = -1.0,
                                        double pump_window_s = -1.0);

// Paper protocol: difference of singlet fractions after R_x(pi/2) and
// R_x(3pi/2); equals <sigma_y> in the convention above.
double measure_sigma_y(const TwoSpinState& state);

}  // namespace pumpkit::gates
