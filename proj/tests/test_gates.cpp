#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "pumpkit/errors.hpp"
#include "pumpkit/gates.hpp"
#include "pumpkit/lattice.hpp"

using namespace pumpkit;
using gates::DoubleWellParams;

namespace {

lattice::LatticePotential fig3_potential() {
  lattice::LatticePotential pot;
  pot.V_X = 7.603;
  pot.V_Xint = 0.261;
  pot.V_Z = 27.03;
  return pot;
}

lattice::ScheduleTable reference_schedule(double period_s = 5e-3,
                                          double U = 2.5) {
  lattice::PumpSchedule pump;
  pump.period_s = period_s;
  pump.n_samples = 128;
  return lattice::build_schedule(fig3_potential(), pump, U);
}

}  // namespace

TEST_CASE("double-well Hamiltonian matches the four-state model") {
  SUBCASE("t_x = 0 is diagonal (U+2D, 0, 0, U-2D)") {
    const Eigen::Matrix4d h = gates::dw_hamiltonian({0.0, 0.7, 3.0});
    Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
    expect(0, 0) = 3.0 + 2 * 0.7;
    expect(3, 3) = 3.0 - 2 * 0.7;
    CHECK((h - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("lowest eigenvalue at (1, 0, 10) is (10 - sqrt(116))/2") {
    const Eigen::Matrix4d h = gates::dw_hamiltonian({1.0, 0.0, 10.0});
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(h);
    CHECK(es.eigenvalues()(0) ==
          doctest::Approx((10.0 - std::sqrt(116.0)) / 2.0).epsilon(1e-12));
  }
  SUBCASE("hermitian with real spectrum for random parameters") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 20; ++i) {
      const Eigen::Matrix4d h =
          gates::dw_hamiltonian({u(rng), u(rng) - 2.5, u(rng)});
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
  SUBCASE("sign structure of the tunnelling entries") {
    const Eigen::Matrix4d h = gates::dw_hamiltonian({1.0, 0.0, 10.0});
    CHECK(h(0, 1) == doctest::Approx(-1.0));
    CHECK(h(0, 2) == doctest::Approx(1.0));
    CHECK(h(1, 3) == doctest::Approx(-1.0));
    CHECK(h(2, 3) == doctest::Approx(1.0));
  }
}

TEST_CASE("superexchange: exact vs perturbative") {
  CHECK(gates::jex_exact({1.0, 0.0, 10.0}) ==
        doctest::Approx((std::sqrt(116.0) - 10.0) / 2.0).epsilon(1e-10));
  CHECK(gates::jex_exact({0.0, 0.3, 5.0}) == 0.0);
  CHECK(gates::jex_perturbative({1.0, 0.0, 10.0}) == doctest::Approx(0.4));
  CHECK(gates::jex_perturbative({1.0, 2.0, 10.0}) ==
        doctest::Approx(4.0 / (10.0 * (1.0 - 0.16))));
  CHECK_THROWS_AS(gates::jex_perturbative({1.0, 5.0, 10.0}), OutOfRegimeError);
  CHECK_THROWS_AS(gates::jex_perturbative({1.0, 6.0, 10.0}), OutOfRegimeError);

  SUBCASE("agreement within 1% at U = 100 t_x, improving with U") {
    double prev = 1e9;
    for (double U : {10.0, 31.6, 100.0, 316.0, 1000.0}) {
      const double ex = gates::jex_exact({1.0, 0.0, U});
      const double pert = gates::jex_perturbative({1.0, 0.0, U});
      const double rel = std::abs(ex - pert) / ex;
      if (U >= 100.0) CHECK(rel < 0.01);
      CHECK(rel < prev);
      prev = rel;
    }
  }
  SUBCASE("triplet sector stays at zero energy") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < 10; ++i) {
      const Eigen::Matrix4d h =
          gates::dw_hamiltonian({u(rng), u(rng) - 1.0, 4.0 + u(rng)});
      // |u,d> - |d,u| (triplet combination) is always an exact 0 eigenvector
      Eigen::Vector4d t(0.0, 1.0, 1.0, 0.0);
      CHECK((h * t).norm() < 1e-12);
    }
  }
}

TEST_CASE("swap-alpha unitary algebra") {
  using gates::swap_alpha_unitary;
  SUBCASE("alpha = 1 is SWAP") {
    const auto u = swap_alpha_unitary(1.0);
    Eigen::Matrix4cd expect = Eigen::Matrix4cd::Identity();
    expect(1, 1) = expect(2, 2) = 0.0;
    expect(1, 2) = expect(2, 1) = 1.0;
    CHECK((u - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("alpha = 2 is the identity") {
    CHECK((swap_alpha_unitary(2.0) - Eigen::Matrix4cd::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  SUBCASE("alpha = 1/2 is sqrt(SWAP)") {
    const auto u = swap_alpha_unitary(0.5);
    const std::complex<double> p(0.5, 0.5), m(0.5, -0.5);
    CHECK(std::abs(u(1, 1) - p) < 1e-12);
    CHECK(std::abs(u(1, 2) - m) < 1e-12);
    CHECK(std::abs(u(2, 1) - m) < 1e-12);
    CHECK(std::abs(u(2, 2) - p) < 1e-12);
  }
  SUBCASE("group law over 100 random pairs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
      const double a = u(rng), b = u(rng);
      const auto lhs = swap_alpha_unitary(a) * swap_alpha_unitary(b);
      const auto rhs = swap_alpha_unitary(a + b);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((swap_alpha_unitary(a) * swap_alpha_unitary(a).adjoint() -
             Eigen::Matrix4cd::Identity())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("gate angle integration over the schedule") {
  const auto table = reference_schedule();
  const double T = table.pump.period_s;

  SUBCASE("additivity over window partitions") {
    const double a = -T / 4, b = T / 4;
    for (double cut : {-T / 8, 0.0, T / 16, T / 5}) {
      const double total = gates::gate_angle(table, a, b).phi;
      const double split = gates::gate_angle(table, a, cut).phi +
                           gates::gate_angle(table, cut, b).phi;
      CHECK(total == doctest::Approx(split).epsilon(1e-12));
    }
  }
  SUBCASE("doubling the period doubles phi") {
    const auto table2 = reference_schedule(1e-2);
    const double phi1 = gates::gate_angle(table, -T / 4, T / 4).phi;
    const double phi2 = gates::gate_angle(table2, -T / 2, T / 2).phi;
    CHECK(phi2 == doctest::Approx(2.0 * phi1).epsilon(1e-6));
  }
  SUBCASE("full period equals the two half-period windows") {
    const double full = gates::gate_angle(table, -T / 4, 3 * T / 4).phi;
    const double w1 = gates::gate_angle(table, -T / 4, T / 4).phi;
    const double w2 = gates::gate_angle(table, T / 4, 3 * T / 4).phi;
    CHECK(full == doctest::Approx(w1 + w2).epsilon(1e-12));
  }
  SUBCASE("window longer than one period rejected") {
    CHECK_THROWS_AS(gates::gate_angle(table, 0.0, 1.5 * T), ConfigError);
    CHECK_THROWS_AS(gates::gate_angle(table, T / 4, 0.0), ConfigError);
  }
  SUBCASE("quadrature matches a brute-force Riemann sum on a fine table") {
    lattice::PumpSchedule fine;
    fine.period_s = T;
    fine.n_samples = 2048;
    const auto ftable = lattice::build_schedule(fig3_potential(), fine, 2.5);
    const double a = -T / 4, b = T / 4;
    double riemann = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double tau = a + (b - a) * (i + 0.5) / n;
      double frac = tau / T - std::floor(tau / T);
      // sample the tabulated jex by linear interpolation on the periodic grid
      const int ns = static_cast<int>(ftable.samples.size());
      const double x = frac * ns;
      const int k = std::min(static_cast<int>(x), ns - 1);
      const double j =
          ftable.jex[k] + (x - k) * (ftable.jex[(k + 1) % ns] - ftable.jex[k]);
      riemann += j * (b - a) / n;
    }
    const double phi_ref = 2.0 * M_PI * ftable.erec_hz * riemann;
    CHECK(gates::gate_angle(ftable, a, b).phi ==
          doctest::Approx(phi_ref).epsilon(1e-4));
    // the coarse table must already be converged to the fine one
    CHECK(gates::gate_angle(table, a, b).phi ==
          doctest::Approx(gates::gate_angle(ftable, a, b).phi).epsilon(2e-3));
  }
}

TEST_CASE("gate calibration") {
  const lattice::LatticePotential pot = fig3_potential();
  lattice::PumpSchedule pump;
  pump.period_s = 5e-3;
  pump.n_samples = 128;

  SUBCASE("pump-period knob reaches all target exponents") {
    double t_for_alpha1 = 0.0;
    for (double target : {0.5, 1.0, 1.5, 2.0}) {
      const auto r = gates::calibrate_gate(target, gates::Knob::PumpPeriod, pot,
                                           pump, 2.5, 0.2e-3, 20e-3);
      CHECK(std::abs(r.achieved_alpha - target) < 1e-4);
      if (target == 1.0) t_for_alpha1 = r.knob_value;
      if (target == 2.0)
        CHECK(r.knob_value == doctest::Approx(2.0 * t_for_alpha1).epsilon(1e-3));
    }
  }
  SUBCASE("unreachable target reports the achievable span") {
    CHECK_THROWS_AS(gates::calibrate_gate(50.0, gates::Knob::PumpPeriod, pot,
                                          pump, 2.5, 0.2e-3, 20e-3),
                    CalibrationRangeError);
  }
  SUBCASE("depth knob: deeper V_X gives smaller alpha") {
    const auto r1 = gates::calibrate_gate(1.3, gates::Knob::DepthVX, pot, pump,
                                          2.5, 5.0, 8.4);
    CHECK(std::abs(r1.achieved_alpha - 1.3) < 1e-4);
    CHECK(r1.knob_value > 5.0);
    CHECK(r1.knob_value < 8.4);
  }
}

TEST_CASE("two-spin Bloch sphere protocols") {
  using gates::TwoSpinHamiltonian;
  SUBCASE("half STO period converts singlet to triplet") {
    TwoSpinHamiltonian h;
    h.delta_updown_hz = 216.5;
    const auto out =
        gates::evolve_two_spin(gates::singlet_state(), h, 1.0 / (2 * 216.5));
    CHECK(out.singlet_probability() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("superexchange phi = pi swaps the product states") {
    TwoSpinHamiltonian h;
    h.jex_hz = 100.0;
    const double tau = 0.5 / 100.0;  // 2 pi J tau = pi
    const auto out = gates::evolve_two_spin(gates::up_down_state(), h, tau);
    const auto target = gates::down_up_state().in_basis(gates::Basis::SingletTriplet);
    const auto got = out.in_basis(gates::Basis::SingletTriplet);
    const double overlap = std::abs(target.amp.dot(got.amp));
    CHECK(overlap == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("free state is stationary") {
    const auto out =
        gates::evolve_two_spin(gates::i_minus_state(), TwoSpinHamiltonian{}, 1.0);
    const auto ref = gates::i_minus_state();
    CHECK(std::abs(ref.amp.dot(out.amp)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("basis conversion is involutive") {
    const auto s = gates::up_down_state();
    const auto back =
        s.in_basis(gates::Basis::UpDown).in_basis(gates::Basis::SingletTriplet);
    CHECK((s.amp - back.amp).norm() < 1e-12);
  }
  SUBCASE("sigma_y protocol") {
    CHECK(gates::measure_sigma_y(gates::i_minus_state()) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(gates::measure_sigma_y(gates::i_plus_state()) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gates::measure_sigma_y(gates::up_down_state()) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gates::measure_sigma_y(gates::singlet_state()) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("fringe: sigma_y after z-rotation of |up,down> is sin(phi)") {
    for (double phi : {0.3, 1.0, 2.2, 4.4}) {
      TwoSpinHamiltonian h;
      h.jex_hz = 80.0;
      const double tau = phi / (2 * M_PI * h.jex_hz);
      const auto out = gates::evolve_two_spin(gates::up_down_state(), h, tau);
      CHECK(gates::measure_sigma_y(out) ==
            doctest::Approx(std::sin(phi)).epsilon(1e-10));
    }
  }
}

TEST_CASE("product state preparation") {
  // pump period calibrated so the quarter-cycle window is a pi/2 z-rotation
  const auto cal = gates::calibrate_gate(1.0, gates::Knob::PumpPeriod,
                                         fig3_potential(), [] {
                                           lattice::PumpSchedule p;
                                           p.period_s = 5e-3;
                                           p.n_samples = 128;
                                           return p;
                                         }(),
                                         2.5, 0.2e-3, 20e-3);
  const auto table = reference_schedule(cal.knob_value);

  SUBCASE("ideal pulses reach |up,down> with fidelity 1") {
    const auto prep = gates::prepare_product_state(table, 216.5);
    CHECK(prep.fidelity == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("doubled gradient pulse lands on |t>, fidelity 1/2") {
    const auto prep =
        gates::prepare_product_state(table, 216.5, 2.0 / (4 * 216.5));
    CHECK(prep.fidelity == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(prep.state.singlet_probability() ==
          doctest::Approx(0.0).epsilon(1e-4));
  }
  SUBCASE("doubled pump window lands on |i_plus>, fidelity 1/2") {
    const auto prep = gates::prepare_product_state(
        table, 216.5, -1.0, 2.0 * table.pump.period_s / 4.0);
    CHECK(prep.fidelity == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(gates::measure_sigma_y(prep.state) ==
          doctest::Approx(1.0).epsilon(1e-3));
  }
}
