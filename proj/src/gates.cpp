#include "pumpkit/gates.hpp"

#include <cmath>
#include <sstream>

#include "pumpkit/errors.hpp"

namespace pumpkit::gates {

using cplx = std::complex<double>;
namespace {
constexpr cplx kI{0.0, 1.0};
}

// ---------------------------------------------------------------------------
// double-well Hubbard model

void DoubleWellParams::validate() const {
  if (!(U > 0.0))
    throw ConfigError("DoubleWellParams.U must be positive (repulsive regime)");
  if (!std::isfinite(t_x) || !std::isfinite(delta))
    throw ConfigError("DoubleWellParams: t_x and delta must be finite");
}

Eigen::Matrix4d dw_hamiltonian(const DoubleWellParams& p) {
  p.validate();
  Eigen::Matrix4d h;
  // basis {|ud,0>, |u,d>, |d,u>, |0,ud>}
  h << p.U + 2.0 * p.delta, -p.t_x, p.t_x, 0.0,
       -p.t_x, 0.0, 0.0, -p.t_x,
       p.t_x, 0.0, 0.0, p.t_x,
       0.0, -p.t_x, p.t_x, p.U - 2.0 * p.delta;
  return h;
}

double jex_exact(const DoubleWellParams& p) {
  p.validate();
  if (p.t_x == 0.0) return 0.0;  // decoupled wells: singlet and triplet degenerate at 0
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(dw_hamiltonian(p));
  const double gap = es.eigenvalues()[1] - es.eigenvalues()[0];
  if (gap < 1e-12 * p.U) {
    std::ostringstream os;
    os << "jex_exact: two lowest double-well states degenerate (gap " << gap
       << " at t_x=" << p.t_x << ", delta=" << p.delta << ", U=" << p.U << ")";
    throw DegenerateSpectrumError(os.str());
  }
  return gap;
}

double jex_perturbative(const DoubleWellParams& p) {
  p.validate();
  if (!(p.U > 2.0 * std::abs(p.delta))) {
    std::ostringstream os;
    os << "jex_perturbative: requires U > 2|delta| (pole of the second-order "
          "result); got U = "
       << p.U << ", 2|delta| = " << 2.0 * std::abs(p.delta);
    throw OutOfRegimeError(os.str());
  }
  const double r = 2.0 * p.delta / p.U;
  return 4.0 * p.t_x * p.t_x / (p.U * (1.0 - r * r));
}

// ---------------------------------------------------------------------------
// gate angle

namespace {

// Exact integral of the composite-Simpson interpolant of the periodic table.
class ScheduleIntegrator {
 public:
  explicit ScheduleIntegrator(const lattice::ScheduleTable& table)
      : period_(table.pump.period_s),
        n_(static_cast<int>(table.jex.size())),
        j_(table.jex) {
    if (n_ < 8 || n_ % 2 != 0)
      throw ConfigError("gate_angle: schedule needs an even sample count >= 8");
    h_ = period_ / n_;
    cum_.assign(n_ / 2 + 1, 0.0);
    for (int k = 0; k < n_ / 2; ++k)
      cum_[k + 1] = cum_[k] + segment(k, 0.0, 2.0);
  }

  double total() const { return cum_.back(); }

  // integral over [0, tau] for tau in [0, period]
  double cumulative(double tau) const {
    const double x = tau / h_;
    int k = std::min(static_cast<int>(x / 2.0), n_ / 2 - 1);
    return cum_[k] + segment(k, 0.0, std::min(x - 2.0 * k, 2.0));
  }

 private:
  double node(int i) const { return j_[((i % n_) + n_) % n_]; }

  // integral of the quadratic through nodes (2k, 2k+1, 2k+2) over the local
  // coordinate xi in [xa, xb], xi in [0, 2]
  double segment(int k, double xa, double xb) const {
    const double j0 = node(2 * k), j1 = node(2 * k + 1), j2 = node(2 * k + 2);
    const double a = 0.5 * (j0 - 2.0 * j1 + j2);
    const double b = 0.5 * (-3.0 * j0 + 4.0 * j1 - j2);
    const double c = j0;
    auto anti = [&](double x) {
      return ((a / 3.0 * x + b / 2.0) * x + c) * x;
    };
    return h_ * (anti(xb) - anti(xa));
  }

  double period_;
  int n_;
  double h_;
  std::vector<double> j_;
  std::vector<double> cum_;
};

}  // namespace

GateAngle gate_angle(const lattice::ScheduleTable& schedule, double tau_start_s,
                     double tau_end_s) {
  const double period = schedule.pump.period_s;
  const double span = tau_end_s - tau_start_s;
  if (span < 0.0)
    throw ConfigError("gate_angle: window end precedes window start");
  if (span > period * (1.0 + 1e-12))
    throw ConfigError("gate_angle: window spans more than one pump period");

  const ScheduleIntegrator integ(schedule);
  double a = std::fmod(tau_start_s, period);
  if (a < 0.0) a += period;
  const double b = a + span;
  double integral;  // E_rec * seconds
  if (b <= period)
    integral = integ.cumulative(b) - integ.cumulative(a);
  else
    integral = integ.total() - integ.cumulative(a) + integ.cumulative(b - period);

  GateAngle out;
  out.phi = 2.0 * M_PI * schedule.erec_hz * integral;
  return out;
}

// ---------------------------------------------------------------------------
// gate unitary

GateUnitary swap_alpha_unitary(double alpha) {
  const cplx e = std::exp(kI * (M_PI * alpha));
  GateUnitary u = GateUnitary::Identity();
  u(1, 1) = 0.5 * (1.0 + e);
  u(1, 2) = 0.5 * (1.0 - e);
  u(2, 1) = 0.5 * (1.0 - e);
  u(2, 2) = 0.5 * (1.0 + e);
  return u;
}

// ---------------------------------------------------------------------------
// calibration

namespace {

double default_window_alpha(const lattice::ScheduleTable& table) {
  const double T = table.pump.period_s;
  return gate_angle(table, -0.25 * T, 0.25 * T).alpha();
}

}  // namespace

CalibrationResult calibrate_gate(double target_alpha, Knob knob,
                                 const lattice::LatticePotential& pot,
                                 const lattice::PumpSchedule& pump, double U,
                                 double knob_lo, double knob_hi,
                                 const lattice::SolverOptions& opts) {
  if (!(knob_lo < knob_hi))
    throw ConfigError("calibrate_gate: need knob_lo < knob_hi");

  std::function<double(double)> alpha_of;
  if (knob == Knob::PumpPeriod) {
    // the schedule shape in tau/T is period-independent, so one table serves
    // every period; alpha is exactly linear in T
    const lattice::ScheduleTable table = lattice::build_schedule(pot, pump, U, opts);
    const double alpha_ref = default_window_alpha(table);
    const double period_ref = pump.period_s;
    alpha_of = [alpha_ref, period_ref](double t) {
      return alpha_ref * t / period_ref;
    };
  } else {
    alpha_of = [&pot, &pump, U, &opts](double v_x) {
      lattice::LatticePotential p = pot;
      p.V_X = v_x;
      return default_window_alpha(lattice::build_schedule(p, pump, U, opts));
    };
  }

  double a_lo = alpha_of(knob_lo);
  double a_hi = alpha_of(knob_hi);
  const bool increasing = a_hi >= a_lo;
  const double span_lo = std::min(a_lo, a_hi);
  const double span_hi = std::max(a_lo, a_hi);
  if (target_alpha < span_lo - 1e-12 || target_alpha > span_hi + 1e-12) {
    std::ostringstream os;
    os << "calibrate_gate: target alpha " << target_alpha
       << " not bracketed; achievable span [" << span_lo << ", " << span_hi
       << "] over the given knob range";
    throw CalibrationRangeError(os.str());
  }

  double lo = knob_lo, hi = knob_hi;
  double mid = 0.5 * (lo + hi);
  double a_mid = alpha_of(mid);
  for (int iter = 0; iter < 200 && std::abs(a_mid - target_alpha) >= 1e-4;
       ++iter) {
    const bool go_high = increasing ? (a_mid < target_alpha)
                                    : (a_mid > target_alpha);
    (go_high ? lo : hi) = mid;
    mid = 0.5 * (lo + hi);
    a_mid = alpha_of(mid);
  }
  if (std::abs(a_mid - target_alpha) >= 1e-4)
    throw CalibrationRangeError(
        "calibrate_gate: bisection failed to reach |alpha - target| < 1e-4 "
        "(alpha may not be monotone over the bracket)");
  return {mid, a_mid};
}

// ---------------------------------------------------------------------------
// two-spin states and protocols

TwoSpinState TwoSpinState::in_basis(Basis target) const {
  if (target == basis) return *this;
  TwoSpinState out;
  out.basis = target;
  if (target == Basis::UpDown) {
    // |ud> = (|s>+|t>)/sqrt(2), |du> = (|t>-|s>)/sqrt(2)
    out.amp[0] = (amp[0] + amp[1]) / std::sqrt(2.0);
    out.amp[1] = (amp[1] - amp[0]) / std::sqrt(2.0);
  } else {
    out.amp[0] = (amp[0] - amp[1]) / std::sqrt(2.0);
    out.amp[1] = (amp[0] + amp[1]) / std::sqrt(2.0);
  }
  return out;
}

double TwoSpinState::singlet_probability() const {
  return std::norm(in_basis(Basis::SingletTriplet).amp[0]);
}

TwoSpinState singlet_state() { return {{1.0, 0.0}, Basis::SingletTriplet}; }
TwoSpinState triplet_state() { return {{0.0, 1.0}, Basis::SingletTriplet}; }
TwoSpinState up_down_state() {
  return {{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}, Basis::SingletTriplet};
}
TwoSpinState down_up_state() {
  return {{-1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}, Basis::SingletTriplet};
}
TwoSpinState i_minus_state() {
  return {{1.0 / std::sqrt(2.0), -kI / std::sqrt(2.0)}, Basis::SingletTriplet};
}
TwoSpinState i_plus_state() {
  return {{1.0 / std::sqrt(2.0), kI / std::sqrt(2.0)}, Basis::SingletTriplet};
}

TwoSpinState evolve_two_spin(const TwoSpinState& state,
                             const TwoSpinHamiltonian& h, double duration_s) {
  const TwoSpinState st = state.in_basis(Basis::SingletTriplet);
  if (std::abs(st.amp.norm() - 1.0) > 1e-12)
    throw ConfigError("evolve_two_spin: state must be normalized");

  // U = exp(-i pi tau (jex sigma_z + D sigma_x)), energies given as E/h
  const double jz = h.jex_hz;
  const double dx = h.delta_updown_hz;
  const double omega = std::hypot(jz, dx);
  const double angle = M_PI * duration_s * omega;

  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity() * std::cos(angle);
  if (omega > 0.0) {
    const double nz = jz / omega;
    const double nx = dx / omega;
    Eigen::Matrix2cd axis;
    axis << nz, nx, nx, -nz;
    u -= kI * std::sin(angle) * axis;
  }

  TwoSpinState out;
  out.basis = Basis::SingletTriplet;
  out.amp = u * st.amp;
  return out.in_basis(state.basis);
}

PreparationResult prepare_product_state(const lattice::ScheduleTable& schedule,
                                        double delta_updown_hz,
                                        double gradient_pulse_s,
                                        double pump_window_s) {
  if (!(delta_updown_hz > 0.0))
    throw ConfigError("prepare_product_state: gradient must be positive");
  if (gradient_pulse_s < 0.0)
    gradient_pulse_s = 0.25 / delta_updown_hz;  // pi/2 rotation about x
  if (pump_window_s < 0.0)
    pump_window_s = 0.25 * schedule.pump.period_s;  // quarter cycle

  PreparationResult res;
  res.gradient_angle = 2.0 * M_PI * delta_updown_hz * gradient_pulse_s;
  res.pump_angle = gate_angle(schedule, 0.0, pump_window_s).phi;

  TwoSpinState psi = singlet_state();
  psi = evolve_two_spin(psi, {0.0, delta_updown_hz}, gradient_pulse_s);
  // the pump window applies a z rotation by the integrated gate angle
  psi = evolve_two_spin(psi, {1.0, 0.0}, res.pump_angle / (2.0 * M_PI));

  const Eigen::Vector2cd target = up_down_state().amp;
  res.fidelity = std::norm(target.dot(psi.in_basis(Basis::SingletTriplet).amp));
  res.state = psi;
  return res;
}

double measure_sigma_y(const TwoSpinState& state) {
  auto rotated_singlet_prob = [&state](double angle) {
    // R_x(angle) realized by the gradient Hamiltonian
    const TwoSpinState r =
        evolve_two_spin(state, {0.0, 1.0}, angle / (2.0 * M_PI));
    return r.singlet_probability();
  };
  return rotated_singlet_prob(0.5 * M_PI) - rotated_singlet_prob(1.5 * M_PI);
}

}  // namespace pumpkit::gates
