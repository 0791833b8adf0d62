#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "pumpkit/analysis.hpp"
#include "pumpkit/errors.hpp"
#include "pumpkit/fft.hpp"

using namespace pumpkit;
using circuit::TimeTrace;

namespace {

TimeTrace synth_trace(double f1, const std::vector<std::pair<int, double>>& comps,
                      const std::vector<double>& phases, double gamma,
                      double offset, int n = 400, double span = 8e-3,
                      double noise_sd = 0.0, std::uint64_t seed = 1) {
  TimeTrace tr;
  tr.f1_hz = f1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (int k = 0; k < n; ++k) {
    const double tau = span * k / n;
    double v = offset;
    for (std::size_t i = 0; i < comps.size(); ++i)
      v += std::exp(-gamma * tau) * comps[i].second *
           std::sin(2 * M_PI * comps[i].first * f1 * tau + phases[i]);
    tr.tau_s.push_back(tau);
    tr.value.push_back(v + (noise_sd > 0 ? noise(rng) : 0.0));
  }
  return tr;
}

}  // namespace

TEST_CASE("multi-frequency fit") {
  const double f1 = 216.5;

  SUBCASE("noiseless single component is recovered to 1e-6") {
    const auto tr = synth_trace(f1, {{7, 0.31}}, {0.9}, 140.0, 0.5);
    const auto fit = analysis::fit_multifreq(tr, f1);
    for (int s = 1; s <= fit.s_max; ++s) {
      if (s == 7) {
        CHECK(fit.amplitude[s - 1] == doctest::Approx(0.31).epsilon(1e-6));
        CHECK(fit.phase[s - 1] == doctest::Approx(0.9).epsilon(1e-5));
      } else {
        CHECK(fit.amplitude[s - 1] < 1e-6);
      }
    }
    CHECK(fit.gamma == doctest::Approx(140.0).epsilon(1e-5));
    CHECK(fit.offset == doctest::Approx(0.5).epsilon(1e-7));
  }
  SUBCASE("fit idempotence: refitting the model reproduces it") {
    const auto tr = synth_trace(f1, {{2, 0.1}, {5, 0.2}}, {0.4, -1.1}, 90.0, 0.55);
    const auto fit = analysis::fit_multifreq(tr, f1);
    TimeTrace model = tr;
    for (std::size_t k = 0; k < model.tau_s.size(); ++k)
      model.value[k] = fit.model(model.tau_s[k]);
    const auto refit = analysis::fit_multifreq(model, f1);
    CHECK(refit.gamma == doctest::Approx(fit.gamma).epsilon(1e-6));
    for (int s = 1; s <= fit.s_max; ++s)
      CHECK(refit.amplitude[s - 1] ==
            doctest::Approx(fit.amplitude[s - 1]).scale(1.0).epsilon(1e-6));
  }
  SUBCASE("1:2 amplitude mixture with 1% noise recovered within 5%") {
    const auto tr = synth_trace(f1, {{4, 0.1}, {11, 0.2}}, {0.7, 2.1}, 100.0,
                                0.5, 500, 9e-3, 0.01, 77);
    const auto fit = analysis::fit_multifreq(tr, f1);
    CHECK(fit.amplitude[3] == doctest::Approx(0.1).epsilon(0.05));
    CHECK(fit.amplitude[10] == doctest::Approx(0.2).epsilon(0.05));
    CHECK(fit.amplitude[10] / fit.amplitude[3] == doctest::Approx(2.0).epsilon(0.1));
    CHECK(fit.amplitude_err[3] > 0.0);
  }
  SUBCASE("amplitudes are reported nonnegative") {
    const auto tr = synth_trace(f1, {{3, 0.2}}, {4.0}, 50.0, 0.5);
    const auto fit = analysis::fit_multifreq(tr, f1);
    for (double a : fit.amplitude) CHECK(a >= 0.0);
    CHECK(fit.amplitude[2] == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("provenance hash matches the input trace") {
    const auto tr = synth_trace(f1, {{3, 0.2}}, {0.0}, 50.0, 0.5);
    const auto fit = analysis::fit_multifreq(tr, f1);
    CHECK(fit.input_hash == analysis::trace_hash(tr));
    CHECK(fit.input_hash != 0);
  }
  SUBCASE("trace shorter than one base period is rejected") {
    const auto tr = synth_trace(f1, {{3, 0.2}}, {0.0}, 50.0, 0.5, 50, 2e-3);
    CHECK_THROWS_AS(analysis::fit_multifreq(tr, f1), InsufficientDataError);
  }
}

TEST_CASE("FFT spectrum") {
  const double f1 = 216.5;

  SUBCASE("radix-2 transform satisfies Parseval to 1e-6") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::complex<double>> x(256);
    double time_energy = 0.0;
    for (auto& v : x) {
      v = {u(rng), u(rng)};
      time_energy += std::norm(v);
    }
    auto X = x;
    fft::transform(X, false);
    double freq_energy = 0.0;
    for (const auto& v : X) freq_energy += std::norm(v);
    CHECK(freq_energy / X.size() ==
          doctest::Approx(time_energy).epsilon(1e-6));
    fft::transform(X, true);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(X[i] - x[i]) < 1e-10);
  }
  SUBCASE("pure sine at 3 f1 has its dominant peak there") {
    const auto tr = synth_trace(f1, {{3, 0.4}}, {0.3}, 0.0, 0.5, 512, 20e-3);
    const auto spec = analysis::fft_spectrum(tr, f1);
    REQUIRE(!spec.peak_s.empty());
    CHECK(spec.peak_s[0] == 3);
    CHECK(std::abs(spec.peak_freq_hz[0] - 3 * f1) < f1 / 2);
  }
  SUBCASE("two-component trace shows both dominant peaks") {
    const auto tr = synth_trace(f1, {{4, 0.2}, {11, 0.2}}, {0.0, 1.0}, 0.0, 0.5,
                                1024, 40e-3);
    const auto spec = analysis::fft_spectrum(tr, f1);
    REQUIRE(spec.peak_s.size() >= 2);
    const int a = spec.peak_s[0], b = spec.peak_s[1];
    CHECK(((a == 4 && b == 11) || (a == 11 && b == 4)));
  }
  SUBCASE("constant trace concentrates at zero frequency") {
    TimeTrace tr;
    tr.f1_hz = f1;
    for (int k = 0; k < 64; ++k) {
      tr.tau_s.push_back(k * 1e-4);
      tr.value.push_back(0.7);
    }
    const auto spec = analysis::fft_spectrum(tr, f1);
    std::size_t imax = 0;
    for (std::size_t i = 1; i < spec.magnitude.size(); ++i)
      if (spec.magnitude[i] > spec.magnitude[imax]) imax = i;
    CHECK(spec.freq_hz[imax] == 0.0);
  }
  SUBCASE("non-uniform sampling is resampled and flagged") {
    TimeTrace tr;
    tr.f1_hz = f1;
    double tau = 0.0;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> jitter(0.5e-4, 1.5e-4);
    for (int k = 0; k < 64; ++k) {
      tr.tau_s.push_back(tau);
      tr.value.push_back(std::sin(2 * M_PI * f1 * tau));
      tau += jitter(rng);
    }
    const auto spec = analysis::fft_spectrum(tr, f1);
    CHECK(spec.resampled);
  }
  SUBCASE("fewer than 8 samples is insufficient") {
    TimeTrace tr;
    tr.f1_hz = f1;
    for (int k = 0; k < 5; ++k) {
      tr.tau_s.push_back(k * 1e-4);
      tr.value.push_back(0.5);
    }
    CHECK_THROWS_AS(analysis::fft_spectrum(tr, f1), InsufficientDataError);
  }
}

TEST_CASE("base-frequency proportional fit") {
  SUBCASE("exact points recover f1 = 216.5 exactly") {
    std::vector<std::pair<int, double>> pts;
    for (int n : {0, 2, 3, 5}) pts.push_back({n, (2 * n + 1) * 216.5});
    const auto fit = analysis::fit_base_frequency(pts);
    CHECK(fit.f1_hz == doctest::Approx(216.5).epsilon(1e-12));
    CHECK(fit.stderr_hz == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("single point at N = 0 returns the frequency itself") {
    const auto fit = analysis::fit_base_frequency({{0, 123.4}});
    CHECK(fit.f1_hz == doctest::Approx(123.4));
  }
  SUBCASE("0.3% noise on 8 points recovers f1 within 0.5%") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(1.0, 0.003);
    std::vector<std::pair<int, double>> pts;
    for (int n = 0; n < 8; ++n)
      pts.push_back({n, (2 * n + 1) * 216.5 * noise(rng)});
    const auto fit = analysis::fit_base_frequency(pts);
    CHECK(fit.f1_hz == doctest::Approx(216.5).epsilon(0.005));
  }
  SUBCASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(analysis::fit_base_frequency({}), InsufficientDataError);
    CHECK_THROWS_AS(analysis::fit_base_frequency({{2, 1082.5}, {2, 1080.0}}),
                    ConfigError);
  }
}

TEST_CASE("exponential decay and fidelity") {
  SUBCASE("exact decay is recovered") {
    std::vector<double> n, d;
    for (int k = 0; k <= 30; ++k) {
      n.push_back(k);
      d.push_back(0.87 * std::exp(-k / 224.0));
    }
    const auto fit = analysis::fit_exponential_decay(n, d);
    CHECK(fit.beta == doctest::Approx(224.0).epsilon(1e-8));
    CHECK(fit.d0 == doctest::Approx(0.87).epsilon(1e-8));
  }
  SUBCASE("constant series reports infinite beta") {
    std::vector<double> n{0, 1, 2, 3}, d{0.5, 0.5, 0.5, 0.5};
    const auto fit = analysis::fit_exponential_decay(n, d);
    CHECK(std::isinf(fit.beta));
    CHECK(analysis::fidelity_from_beta(fit.beta) == 1.0);
  }
  SUBCASE("fidelity arithmetic") {
    CHECK(analysis::fidelity_from_beta(224.0) ==
          doctest::Approx(0.99777).epsilon(1e-4));
    const double beta = 1.0 / (2.0 * std::log(1.0 / 0.9978));
    CHECK(analysis::fidelity_from_beta(beta) ==
          doctest::Approx(0.9978).epsilon(1e-12));
    CHECK_THROWS_AS(analysis::fidelity_from_beta(-1.0), ConfigError);
  }
  SUBCASE("non-positive values rejected") {
    CHECK_THROWS_AS(
        analysis::fit_exponential_decay({0, 1, 2}, {1.0, -0.5, 0.2}),
        ConfigError);
    CHECK_THROWS_AS(analysis::fit_exponential_decay({0, 1}, {1.0, 0.9}),
                    InsufficientDataError);
  }
}

TEST_CASE("single-sine fit") {
  SUBCASE("pure 1515.5 Hz sine recovered to numerical precision") {
    TimeTrace tr;
    tr.f1_hz = 216.5;
    for (int k = 0; k < 300; ++k) {
      const double tau = k * 3e-3 / 300;
      tr.tau_s.push_back(tau);
      tr.value.push_back(0.5 + 0.4 * std::sin(2 * M_PI * 1515.5 * tau + 0.2));
    }
    const auto fit = analysis::fit_single_sine(tr);
    CHECK(fit.freq_hz == doctest::Approx(1515.5).epsilon(1e-7));
    CHECK(fit.amplitude == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(!fit.amplitude_undetermined);
  }
  SUBCASE("flat trace flags an undetermined frequency") {
    TimeTrace tr;
    tr.f1_hz = 216.5;
    for (int k = 0; k < 64; ++k) {
      tr.tau_s.push_back(k * 1e-4);
      tr.value.push_back(0.5);
    }
    const auto fit = analysis::fit_single_sine(tr);
    CHECK(fit.amplitude_undetermined);
    CHECK(fit.amplitude == doctest::Approx(0.0));
  }
  SUBCASE("multi-modal traces are rejected toward fit_multifreq") {
    const auto tr = synth_trace(216.5, {{2, 0.2}, {9, 0.2}}, {0.0, 0.4}, 0.0,
                                0.5, 512, 20e-3);
    CHECK_THROWS_WITH_AS(analysis::fit_single_sine(tr),
                         doctest::Contains("fit_multifreq"), FitFailureError);
  }
}

TEST_CASE("FFT/fit consistency on a Fig.-4-style synthetic trace") {
  const double f1 = 216.5;
  const auto tr = synth_trace(f1, {{4, 0.25}, {11, 0.12}, {3, 0.05}},
                              {0.5, 1.4, -0.3}, 60.0, 0.5, 1024, 30e-3);
  const auto fit = analysis::fit_multifreq(tr, f1);
  const auto spec = analysis::fft_spectrum(tr, f1);
  // dominant ordering must agree: s = 4 above s = 11 above s = 3
  CHECK(fit.amplitude[3] > fit.amplitude[10]);
  CHECK(fit.amplitude[10] > fit.amplitude[2]);
  REQUIRE(spec.peak_s.size() >= 2);
  CHECK(spec.peak_s[0] == 4);
  CHECK(spec.peak_s[1] == 11);
}
