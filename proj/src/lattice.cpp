#include "pumpkit/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "pumpkit/errors.hpp"
#include "pumpkit/gates.hpp"

namespace pumpkit::lattice {

using cplx = std::complex<double>;
namespace {
constexpr cplx kI{0.0, 1.0};
}

// ---------------------------------------------------------------------------
// potential reduction

void LatticePotential::validate() const {
  auto check_depth = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "LatticePotential." << name << " must be a finite depth >= 0, got "
         << v;
      throw ConfigError(os.str());
    }
  };
  check_depth(V_X, "V_X");
  check_depth(V_Xint, "V_Xint");
  check_depth(V_Z, "V_Z");
  if (!(I_XZ >= 0.0 && I_XZ <= 1.0))
    throw ConfigError("LatticePotential.I_XZ must lie in [0, 1]");
  if (!(lambda_m > 0.0))
    throw ConfigError("LatticePotential.lambda must be positive");
  if (!std::isfinite(theta))
    throw ConfigError("LatticePotential.theta must be finite");
}

void PumpSchedule::validate() const {
  if (!(period_s > 0.0)) throw ConfigError("PumpSchedule.period must be positive");
  if (direction != 1 && direction != -1)
    throw ConfigError("PumpSchedule.direction must be +1 or -1");
  if (n_samples < 8) throw ConfigError("PumpSchedule.n_samples must be >= 8");
}

Potential1D reduce_to_1d(const LatticePotential& pot) {
  pot.validate();
  // z = 0 antinode slice of the 3D potential: cos(kz) = 1, the transverse
  // cos^2 wells contribute only constants and are dropped.
  Potential1D p;
  p.short_x = pot.V_X;
  p.theta = pot.theta;
  p.short_int = pot.V_Xint;
  const double a = std::sqrt(pot.V_Xint * pot.V_Z);
  p.long_plus = a;
  p.long_minus = pot.I_XZ * a;
  p.lambda_m = pot.lambda_m;
  return p;
}

cplx Potential1D::fourier(int n, double phi_sl) const {
  // V(x) = -short_x cos^2(kx+theta/2) - short_int cos^2(kx)
  //        -long_plus cos(kx+phi) - long_minus cos(kx-phi)
  switch (n) {
    case 0:
      return -0.5 * (short_x + short_int);
    case 1:
      return -0.5 * (long_plus * std::exp(kI * phi_sl) +
                     long_minus * std::exp(-kI * phi_sl));
    case -1:
      return std::conj(fourier(1, phi_sl));
    case 2:
      return -0.25 * (short_x * std::exp(kI * theta) + short_int);
    case -2:
      return std::conj(fourier(2, phi_sl));
    default:
      return {0.0, 0.0};
  }
}

// ---------------------------------------------------------------------------
// Bloch solver

namespace {

void validate_solver(const SolverOptions& opts) {
  if (2 * opts.max_harmonic + 1 < 16)
    throw ConfigError(
        "SolverOptions.max_harmonic too small: need at least 16 plane waves");
  if (opts.n_q < 4 || opts.n_q % 2 != 0)
    throw ConfigError("SolverOptions.n_q must be even and >= 4");
  if (opts.n_bands < 1 || opts.n_bands > 2 * opts.max_harmonic + 1)
    throw ConfigError("SolverOptions.n_bands out of range for the cutoff");
}

Eigen::MatrixXcd bloch_hamiltonian(const Potential1D& pot, double phi_sl,
                                   double q_frac, int max_harmonic) {
  const int dim = 2 * max_harmonic + 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const double n = q_frac + (r - max_harmonic);
    h(r, r) = n * n;
    for (int dn = -2; dn <= 2; ++dn) {
      const int c = r - dn;
      if (dn == 0 || c < 0 || c >= dim) continue;
      h(r, c) = pot.fourier(dn, phi_sl);
    }
  }
  return h;
}

}  // namespace

BandSolution solve_bloch(const Potential1D& pot, double phi_sl,
                         const SolverOptions& opts) {
  validate_solver(opts);
  const int dim = 2 * opts.max_harmonic + 1;

  BandSolution out;
  out.max_harmonic = opts.max_harmonic;
  out.phi_sl = phi_sl;
  out.q.resize(opts.n_q);
  out.energy.resize(opts.n_q, opts.n_bands);
  out.states.resize(opts.n_q);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
  for (int i = 0; i < opts.n_q; ++i) {
    const double q = -0.5 + static_cast<double>(i) / opts.n_q;
    out.q[i] = q;
    solver.compute(bloch_hamiltonian(pot, phi_sl, q, opts.max_harmonic));
    if (solver.info() != Eigen::Success) {
      std::ostringstream os;
      os << "solve_bloch: eigensolver failed to converge at q = " << q
         << ", phi_SL = " << phi_sl << " (dim " << dim << ")";
      throw NumericError(os.str());
    }
    out.energy.row(i) = solver.eigenvalues().head(opts.n_bands).transpose();
    out.states[i] = solver.eigenvectors().leftCols(opts.n_bands);
  }
  return out;
}

double band_convergence(const Potential1D& pot, double phi_sl,
                        const SolverOptions& opts) {
  SolverOptions fine = opts;
  fine.max_harmonic = 2 * opts.max_harmonic;
  const BandSolution coarse = solve_bloch(pot, phi_sl, opts);
  const BandSolution refined = solve_bloch(pot, phi_sl, fine);
  return (coarse.energy - refined.energy).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// two-band Wannier construction

namespace {

// Bloch coefficients reinterpreted at q + 1 (one reciprocal vector up):
// c'_n = c_{n+1}.
Eigen::MatrixXcd shift_reciprocal(const Eigen::MatrixXcd& v) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
  out.topRows(v.rows() - 1) = v.bottomRows(v.rows() - 1);
  return out;
}

Eigen::MatrixXcd unitarize(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

struct TwoBandWannier {
  // per-orbital data, index 0 = orbital nearest site -1/4 cell ("A"/left)
  Eigen::Vector2d center_cells;       // in (-1/2, 1/2]
  std::vector<Eigen::Matrix2cd> gauge;  // U_i per q point
  Eigen::Matrix2cd h0, h1;            // real-space couplings h(0), h(1)
};

TwoBandWannier wannierize_two_band(const BandSolution& bands) {
  const int n = static_cast<int>(bands.q.size());
  if (bands.energy.cols() < 2)
    throw ConfigError("wannierize_two_band: needs the two lowest bands");

  // link overlaps, unitarized
  std::vector<Eigen::Matrix2cd> links(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXcd& vi = bands.states[i].leftCols(2);
    const Eigen::MatrixXcd vj =
        (i + 1 < n) ? bands.states[i + 1].leftCols(2)
                    : shift_reciprocal(bands.states[0].leftCols(2));
    links[i] = unitarize(vi.adjoint() * vj);
  }

  Eigen::Matrix2cd loop = Eigen::Matrix2cd::Identity();
  for (int i = 0; i < n; ++i) loop = loop * links[i];

  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(loop);
  Eigen::Vector2cd lambda = es.eigenvalues();
  Eigen::Matrix2cd w = es.eigenvectors();

  // Wannier centers from the loop eigenvalue phases; the sign matches the
  // position axis orientation declared in the header.
  Eigen::Vector2d centers;
  for (int j = 0; j < 2; ++j) centers[j] = -std::arg(lambda[j]) / (2.0 * M_PI);

  // label orbitals by nearest short-lattice site (-1/4 or +1/4 cell)
  auto circ_dist = [](double a, double b) {
    double d = std::fmod(a - b + 1.5, 1.0) - 0.5;
    return std::abs(d);
  };
  const bool j0_left = circ_dist(centers[0], -0.25) <= circ_dist(centers[0], 0.25);
  const bool j1_left = circ_dist(centers[1], -0.25) <= circ_dist(centers[1], 0.25);
  int order[2] = {0, 1};
  if (j0_left == j1_left) {
    // degenerate assignment (balanced configuration): order by center value
    if (centers[1] < centers[0]) std::swap(order[0], order[1]);
  } else if (!j0_left) {
    std::swap(order[0], order[1]);
  }

  TwoBandWannier out;
  Eigen::Matrix2cd w_sorted;
  Eigen::Vector2d theta;
  for (int j = 0; j < 2; ++j) {
    w_sorted.col(j) = w.col(order[j]);
    out.center_cells[j] = centers[order[j]];
    theta[j] = std::arg(lambda[order[j]]);
  }

  // parallel-transport gauge with the loop phase spread uniformly over links
  out.gauge.resize(n);
  out.gauge[0] = unitarize(w_sorted);
  Eigen::Matrix2cd spread = Eigen::Matrix2cd::Zero();
  spread(0, 0) = std::exp(kI * theta[0] / static_cast<double>(n));
  spread(1, 1) = std::exp(kI * theta[1] / static_cast<double>(n));
  for (int i = 0; i + 1 < n; ++i)
    out.gauge[i + 1] = links[i].adjoint() * out.gauge[i] * spread;

  // real-space couplings from the Wannier-gauge Hamiltonian
  out.h0.setZero();
  out.h1.setZero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2cd e(bands.energy(i, 0), bands.energy(i, 1));
    const Eigen::Matrix2cd hw =
        out.gauge[i].adjoint() * e.asDiagonal() * out.gauge[i];
    out.h0 += hw;
    out.h1 += hw * std::exp(-kI * (2.0 * M_PI * bands.q[i]));
  }
  out.h0 /= static_cast<double>(n);
  out.h1 /= static_cast<double>(n);
  return out;
}

}  // namespace

DispersionFit fit_rice_mele_dispersion(const Eigen::VectorXd& q_frac,
                                       const Eigen::VectorXd& half_gap,
                                       double delta) {
  if (q_frac.size() != half_gap.size() || q_frac.size() < 3)
    throw ConfigError("fit_rice_mele_dispersion: need >= 3 matched samples");

  // (gap/2)^2 = delta^2 + (t^2 + t'^2) + 2 t t' cos(2 pi q): linear least
  // squares in a = t^2 + t'^2 and b = 2 t t'.
  const auto m = q_frac.size();
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(2.0 * M_PI * q_frac[i]);
    rhs[i] = half_gap[i] * half_gap[i] - delta * delta;
  }
  const Eigen::Vector2d ab = design.colPivHouseholderQr().solve(rhs);
  const double a = ab[0];
  const double b = std::abs(ab[1]);
  const double disc = std::max(a * a - b * b, 0.0);
  const double t2 = 0.5 * (a + std::sqrt(disc));
  const double tp2 = 0.5 * std::max(a - std::sqrt(disc), 0.0);

  DispersionFit fit;
  fit.t_x = std::sqrt(std::max(t2, 0.0));
  fit.t_x_prime = std::sqrt(tp2);

  double ss = 0.0;
  double scale = std::max(half_gap.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double model = std::sqrt(
        std::max(delta * delta + t2 + tp2 + 2.0 * fit.t_x * fit.t_x_prime *
                                               design(i, 1),
                 0.0));
    const double r = (half_gap[i] - model) / scale;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(m));
  return fit;
}

RiceMeleSample extract_tight_binding(const BandSolution& bands) {
  if (bands.energy.cols() < 2)
    throw ConfigError("extract_tight_binding: solve with n_bands >= 2");

  const TwoBandWannier w = wannierize_two_band(bands);

  RiceMeleSample out;
  out.delta = 0.5 * (w.h0(0, 0).real() - w.h0(1, 1).real());
  const double t_intra = std::abs(w.h0(0, 1));
  const double t_inter = std::max(std::abs(w.h1(0, 1)), std::abs(w.h1(1, 0)));

  // polish the couplings with the closed-form dispersion fit at fixed delta
  const auto n = bands.q.size();
  Eigen::VectorXd half_gap(n);
  for (Eigen::Index i = 0; i < n; ++i)
    half_gap[i] = 0.5 * (bands.energy(i, 1) - bands.energy(i, 0));
  const DispersionFit fit =
      fit_rice_mele_dispersion(bands.q, half_gap, out.delta);

  // the dispersion alone cannot tell the two bonds apart; the Wannier
  // couplings assign them to the intra- and inter-cell bond
  if (t_intra >= t_inter) {
    out.t_x = fit.t_x;
    out.t_x_prime = fit.t_x_prime;
  } else {
    out.t_x = fit.t_x_prime;
    out.t_x_prime = fit.t_x;
  }
  out.fit_residual = fit.residual;

  // shallow lattices pick up beyond-nearest-neighbour tunnelling at the
  // few-1e-3 level; only genuinely non-two-band spectra should reject
  if (fit.residual > 1e-2) {
    std::ostringstream os;
    os << "extract_tight_binding: two-band spectrum deviates from the "
          "Rice-Mele dispersion (relative RMS residual "
       << fit.residual << " > 1e-2)";
    throw ModelMismatchError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// schedule

double ScheduleTable::max_jex() const {
  return jex.empty() ? 0.0 : *std::max_element(jex.begin(), jex.end());
}

ScheduleTable build_schedule(const LatticePotential& pot,
                             const PumpSchedule& pump, double U,
                             const SolverOptions& opts) {
  pot.validate();
  pump.validate();
  if (!(U > 0.0)) throw ConfigError("build_schedule: Hubbard U must be positive");

  const Potential1D p1d = reduce_to_1d(pot);

  ScheduleTable table;
  table.potential = pot;
  table.pump = pump;
  table.U = U;
  table.erec_hz = units::recoil_frequency_hz(pot.lambda_m);
  table.samples.reserve(pump.n_samples);
  table.jex.reserve(pump.n_samples);

  for (int i = 0; i < pump.n_samples; ++i) {
    const double tau_frac = static_cast<double>(i) / pump.n_samples;
    const double phi = pump.phase(tau_frac * pump.period_s);
    RiceMeleSample s = extract_tight_binding(solve_bloch(p1d, phi, opts));
    s.tau_frac = tau_frac;
    table.samples.push_back(s);
    // the gate-relevant coupling is the active (closing) bond, which is
    // always the stronger of the two within an operation cycle
    const double t_active = std::max(s.t_x, s.t_x_prime);
    table.jex.push_back(
        gates::jex_exact({t_active, s.delta, U}));
  }
  return table;
}

// ---------------------------------------------------------------------------
// winding

namespace {

// Gauge-invariant Zak phase accumulated over the BZ loop for one band.
double zak_phase(const BandSolution& bands, int band) {
  const int n = static_cast<int>(bands.q.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXcd vi = bands.states[i].col(band);
    const Eigen::VectorXcd vj =
        (i + 1 < n) ? bands.states[i + 1].col(band)
                    : Eigen::VectorXcd(shift_reciprocal(bands.states[0]).col(band));
    total += std::arg(vi.dot(vj));
  }
  return total;
}

}  // namespace

WindingReport wannier_center_winding(const LatticePotential& pot,
                                     const PumpSchedule& pump,
                                     const SolverOptions& opts, int n_tau) {
  pot.validate();
  pump.validate();
  if (n_tau < 16) throw ConfigError("wannier_center_winding: n_tau must be >= 16");

  const Potential1D p1d = reduce_to_1d(pot);
  WindingReport report;

  if (p1d.long_plus == 0.0 && p1d.long_minus == 0.0) {
    // pump off: the potential is phase-independent, nothing moves
    const BandSolution b = solve_bloch(p1d, pump.phase(0.0), opts);
    const double bw = b.energy.maxCoeff() - b.energy.minCoeff();
    report.min_relative_gap =
        (b.energy.col(1) - b.energy.col(0)).minCoeff() / std::max(bw, 1e-300);
    return report;
  }

  double min_gap = std::numeric_limits<double>::infinity();
  double bandwidth = 0.0;
  Eigen::Vector2d track = Eigen::Vector2d::Zero();  // unwrapped centers, cells
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  for (int i = 0; i <= n_tau; ++i) {
    const double tau = pump.period_s * static_cast<double>(i) / n_tau;
    const BandSolution b = solve_bloch(p1d, pump.phase(tau), opts);
    min_gap = std::min(min_gap, (b.energy.col(1) - b.energy.col(0)).minCoeff());
    bandwidth = std::max(bandwidth, b.energy.maxCoeff() - b.energy.minCoeff());

    Eigen::Vector2d centers;
    for (int band = 0; band < 2; ++band)
      centers[band] = -zak_phase(b, band) / (2.0 * M_PI);
    if (i == 0) {
      track = centers;
      start = centers;
    } else {
      for (int band = 0; band < 2; ++band) {
        double step = centers[band] - track[band];
        step -= std::round(step);  // continuity: |step| < 1/2 cell per sample
        track[band] += step;
      }
    }
  }

  report.min_relative_gap = min_gap / std::max(bandwidth, 1e-300);
  if (report.min_relative_gap < 1e-6) {
    std::ostringstream os;
    os << "wannier_center_winding: two-band gap closes along the cycle "
          "(relative gap "
       << report.min_relative_gap << "); winding undefined";
    throw TopologyUndefinedError(os.str());
  }

  // orient the position axis so a forward ramp moves the ground band by +2
  report.band0_sites = -2.0 * (track[0] - start[0]);
  report.band1_sites = -2.0 * (track[1] - start[1]);
  return report;
}

// ---------------------------------------------------------------------------
// orbitals

WannierOrbital ground_orbital(const BandSolution& bands) {
  const TwoBandWannier w = wannierize_two_band(bands);
  const int n = static_cast<int>(bands.q.size());

  // ground eigenvector of the Wannier-gauge Bloch Hamiltonian per q
  std::vector<Eigen::Vector2cd> v(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2cd e(bands.energy(i, 0), bands.energy(i, 1));
    const Eigen::Matrix2cd hw =
        w.gauge[i].adjoint() * e.asDiagonal() * w.gauge[i];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(hw);
    v[i] = es.eigenvectors().col(0);
  }

  // parallel transport the band phase and spread the closure phase evenly
  for (int i = 1; i < n; ++i) {
    const cplx ov = v[i - 1].dot(v[i]);
    v[i] *= std::exp(-kI * std::arg(ov));
  }
  const double closure = std::arg(v[n - 1].dot(v[0]));
  for (int i = 0; i < n; ++i)
    v[i] *= std::exp(-kI * closure * static_cast<double>(i) /
                     static_cast<double>(n));

  // Wannier amplitudes on the (cell, orbital) grid
  WannierOrbital orb;
  orb.band = 0;
  orb.site_weights = Eigen::VectorXd::Zero(2 * n);
  double center = 0.0;
  double norm = 0.0;
  for (int r = 0; r < n; ++r) {
    const int cell = r - n / 2;  // window centered on the home cell
    Eigen::Vector2cd psi = Eigen::Vector2cd::Zero();
    for (int i = 0; i < n; ++i)
      psi += v[i] * std::exp(kI * (2.0 * M_PI * bands.q[i] * cell));
    psi /= static_cast<double>(n);
    for (int o = 0; o < 2; ++o) {
      const double p = std::norm(psi[o]);
      const double site = 2.0 * cell + o;
      orb.site_weights[2 * r + o] = p;
      center += p * site;
      norm += p;
    }
  }
  orb.site_weights /= norm;
  orb.center_sites = center / norm;
  return orb;
}

double orbital_double_occupancy(const WannierOrbital& orbital) {
  const double norm = orbital.site_weights.sum();
  if (std::abs(norm - 1.0) > 1e-8)
    throw ConfigError("orbital_double_occupancy: weights must sum to 1");
  return orbital.site_weights.squaredNorm() / (norm * norm);
}

}  // namespace pumpkit::lattice
