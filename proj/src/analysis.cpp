#include "pumpkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "pumpkit/errors.hpp"
#include "pumpkit/fft.hpp"
#include "pumpkit/levmar.hpp"

namespace pumpkit::analysis {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

void check_trace(const TimeTrace& trace, std::size_t min_samples) {
  if (trace.tau_s.size() != trace.value.size())
    throw ConfigError("trace: tau and value lengths differ");
  if (trace.tau_s.size() < min_samples) {
    std::ostringstream os;
    os << "trace has " << trace.tau_s.size() << " samples; need at least "
       << min_samples;
    throw InsufficientDataError(os.str());
  }
  for (std::size_t i = 0; i < trace.tau_s.size(); ++i) {
    if (!std::isfinite(trace.tau_s[i]) || !std::isfinite(trace.value[i]))
      throw ConfigError("trace contains non-finite samples");
    if (i > 0 && trace.tau_s[i] <= trace.tau_s[i - 1])
      throw ConfigError("trace times must be strictly increasing");
  }
}

}  // namespace

std::uint64_t trace_hash(const TimeTrace& trace) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, trace.tau_s.data(), trace.tau_s.size() * sizeof(double));
  h = fnv1a(h, trace.value.data(), trace.value.size() * sizeof(double));
  h = fnv1a(h, &trace.f1_hz, sizeof(double));
  return h;
}

// ---------------------------------------------------------------------------
// multi-frequency fit

double MultiFreqFit::model(double tau_s) const {
  double sum = 0.0;
  for (int s = 1; s <= s_max; ++s)
    sum += amplitude[s - 1] *
           std::sin(2.0 * M_PI * s * f1_hz * tau_s + phase[s - 1]);
  return std::exp(-gamma * tau_s) * sum + offset;
}

MultiFreqFit fit_multifreq(const TimeTrace& trace, double f1_hz, int s_max) {
  check_trace(trace, 8);
  if (!(f1_hz > 0.0)) throw ConfigError("fit_multifreq: f1 must be positive");
  if (s_max < 1) throw ConfigError("fit_multifreq: s_max must be >= 1");
  const std::size_t m = trace.tau_s.size();
  if (m < static_cast<std::size_t>(2 * s_max + 2))
    throw InsufficientDataError(
        "fit_multifreq: fewer samples than fit parameters");
  const double span = trace.tau_s.back() - trace.tau_s.front();
  if (span * f1_hz < 1.0 - 1e-9)
    throw InsufficientDataError(
        "fit_multifreq: trace must span at least one period of f1");

  // parameters p = [Gamma, F0, P_1..P_smax, Q_1..Q_smax]
  const int np = 2 + 2 * s_max;
  auto model_of = [&](const Eigen::VectorXd& p, double tau) {
    double sum = 0.0;
    for (int s = 1; s <= s_max; ++s) {
      const double w = 2.0 * M_PI * s * f1_hz * tau;
      sum += p[1 + s] * std::sin(w) + p[1 + s_max + s] * std::cos(w);
    }
    return std::exp(-p[0] * tau) * sum + p[1];
  };

  levmar::ResidualFn residual = [&](const Eigen::VectorXd& p,
                                    Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < m; ++i)
      r[i] = model_of(p, trace.tau_s[i]) - trace.value[i];
  };
  levmar::JacobianFn jacobian = [&](const Eigen::VectorXd& p,
                                    Eigen::MatrixXd& jac) {
    for (std::size_t i = 0; i < m; ++i) {
      const double tau = trace.tau_s[i];
      const double env = std::exp(-p[0] * tau);
      double oscillation = 0.0;
      for (int s = 1; s <= s_max; ++s) {
        const double w = 2.0 * M_PI * s * f1_hz * tau;
        const double sn = std::sin(w), cs = std::cos(w);
        oscillation += p[1 + s] * sn + p[1 + s_max + s] * cs;
        jac(i, 1 + s) = env * sn;
        jac(i, 1 + s_max + s) = env * cs;
      }
      jac(i, 0) = -tau * env * oscillation;
      jac(i, 1) = 1.0;
    }
  };

  // deterministic start: discrete projections at each harmonic, Gamma = 0
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(np);
  p0[1] = std::accumulate(trace.value.begin(), trace.value.end(), 0.0) /
          static_cast<double>(m);
  for (int s = 1; s <= s_max; ++s) {
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = 2.0 * M_PI * s * f1_hz * trace.tau_s[i];
      ps += (trace.value[i] - p0[1]) * std::sin(w);
      qs += (trace.value[i] - p0[1]) * std::cos(w);
    }
    p0[1 + s] = 2.0 * ps / static_cast<double>(m);
    p0[1 + s_max + s] = 2.0 * qs / static_cast<double>(m);
  }

  levmar::Options opts;
  opts.relative_cost_tol = 1e-10;
  const levmar::Result res = levmar::minimize(residual, p0, m, jacobian, opts);
  if (!res.converged) {
    std::ostringstream os;
    os << "fit_multifreq did not converge after " << res.iterations
       << " iterations (cost " << res.cost << "); best Gamma = "
       << res.params[0];
    throw FitFailureError(os.str());
  }

  MultiFreqFit fit;
  fit.f1_hz = f1_hz;
  fit.s_max = s_max;
  fit.gamma = res.params[0];
  fit.offset = res.params[1];
  fit.gamma_err = std::sqrt(std::max(res.covariance(0, 0), 0.0));
  fit.offset_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
  fit.covariance = res.covariance;
  fit.residual_norm = std::sqrt(2.0 * res.cost);
  fit.iterations = res.iterations;
  fit.input_hash = trace_hash(trace);
  fit.amplitude.resize(s_max);
  fit.phase.resize(s_max);
  fit.amplitude_err.resize(s_max);
  fit.phase_err.resize(s_max);
  for (int s = 1; s <= s_max; ++s) {
    const double ps = res.params[1 + s];
    const double qs = res.params[1 + s_max + s];
    const double a = std::hypot(ps, qs);
    fit.amplitude[s - 1] = a;
    fit.phase[s - 1] = std::atan2(qs, ps);
    // propagate (P, Q) covariance through A = |(P,Q)|, theta = atan2(Q, P)
    const double vp = res.covariance(1 + s, 1 + s);
    const double vq = res.covariance(1 + s_max + s, 1 + s_max + s);
    const double cpq = res.covariance(1 + s, 1 + s_max + s);
    if (a > 0.0) {
      fit.amplitude_err[s - 1] = std::sqrt(std::max(
          (ps * ps * vp + qs * qs * vq + 2.0 * ps * qs * cpq) / (a * a), 0.0));
      fit.phase_err[s - 1] = std::sqrt(std::max(
          (qs * qs * vp + ps * ps * vq - 2.0 * ps * qs * cpq) /
              (a * a * a * a),
          0.0));
    } else {
      fit.amplitude_err[s - 1] = std::sqrt(std::max(vp + vq, 0.0));
      fit.phase_err[s - 1] = M_PI;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// FFT spectrum

Spectrum fft_spectrum(const TimeTrace& trace, double f1_hz) {
  check_trace(trace, 8);
  const std::size_t m = trace.tau_s.size();

  // uniform grid check; resample with linear interpolation if violated
  const double dt0 = (trace.tau_s.back() - trace.tau_s.front()) /
                     static_cast<double>(m - 1);
  bool uniform = true;
  for (std::size_t i = 1; i < m; ++i) {
    const double dt = trace.tau_s[i] - trace.tau_s[i - 1];
    if (std::abs(dt - dt0) > 1e-9 * std::max(dt0, 1e-300)) {
      uniform = false;
      break;
    }
  }

  Spectrum spec;
  spec.resampled = !uniform;
  spec.f1_hz = f1_hz;
  spec.input_hash = trace_hash(trace);

  std::vector<double> samples;
  double dt = dt0;
  if (uniform) {
    samples = trace.value;
  } else {
    samples.resize(m);
    std::size_t j = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double t = trace.tau_s.front() + dt * static_cast<double>(i);
      while (j + 2 < m && trace.tau_s[j + 1] < t) ++j;
      const double t0 = trace.tau_s[j], t1 = trace.tau_s[j + 1];
      const double w = (t - t0) / (t1 - t0);
      samples[i] = (1.0 - w) * trace.value[j] + w * trace.value[j + 1];
    }
  }

  const std::size_t nfft = fft::next_pow2(samples.size());
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = samples[i];
  fft::transform(buf);

  const std::size_t nbins = nfft / 2 + 1;
  spec.freq_hz.resize(nbins);
  spec.freq_f1.resize(nbins);
  spec.magnitude.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    spec.freq_hz[k] = static_cast<double>(k) / (dt * static_cast<double>(nfft));
    spec.freq_f1[k] = f1_hz > 0.0 ? spec.freq_hz[k] / f1_hz : 0.0;
    spec.magnitude[k] = std::abs(buf[k]) / static_cast<double>(samples.size());
  }

  // peak picker over the oscillating part (k >= 1)
  double peak_scale = 0.0;
  for (std::size_t k = 1; k < nbins; ++k)
    peak_scale = std::max(peak_scale, spec.magnitude[k]);
  std::vector<std::pair<double, std::size_t>> peaks;
  for (std::size_t k = 1; k + 1 < nbins; ++k) {
    if (spec.magnitude[k] >= spec.magnitude[k - 1] &&
        spec.magnitude[k] > spec.magnitude[k + 1] &&
        spec.magnitude[k] >= 0.1 * peak_scale && peak_scale > 0.0)
      peaks.emplace_back(spec.magnitude[k], k);
  }
  std::sort(peaks.rbegin(), peaks.rend());
  for (const auto& [mag, k] : peaks) {
    spec.peak_freq_hz.push_back(spec.freq_hz[k]);
    if (f1_hz > 0.0)
      spec.peak_s.push_back(
          static_cast<int>(std::lround(spec.freq_hz[k] / f1_hz)));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// simple fits

BaseFrequencyFit fit_base_frequency(
    const std::vector<std::pair<int, double>>& points) {
  if (points.empty())
    throw InsufficientDataError("fit_base_frequency: no points");
  if (points.size() > 1) {
    const int n0 = points.front().first;
    if (std::all_of(points.begin(), points.end(),
                    [n0](const auto& p) { return p.first == n0; }))
      throw ConfigError(
          "fit_base_frequency: degenerate design, all points share one N_cyc");
  }

  double sf = 0.0, ss = 0.0;
  for (const auto& [n, f] : points) {
    const double s = 2.0 * n + 1.0;
    sf += s * f;
    ss += s * s;
  }
  BaseFrequencyFit fit;
  fit.f1_hz = sf / ss;
  if (points.size() > 1) {
    double rss = 0.0;
    for (const auto& [n, f] : points) {
      const double r = f - (2.0 * n + 1.0) * fit.f1_hz;
      rss += r * r;
    }
    fit.stderr_hz = std::sqrt(rss / static_cast<double>(points.size() - 1) / ss);
  }
  return fit;
}

DecayFit fit_exponential_decay(const std::vector<double>& n,
                               const std::vector<double>& d) {
  if (n.size() != d.size() || n.size() < 3)
    throw InsufficientDataError(
        "fit_exponential_decay: need >= 3 matched points");
  for (double v : d)
    if (!(v > 0.0))
      throw ConfigError("fit_exponential_decay: values must be positive");

  const auto [mn, mx] = std::minmax_element(d.begin(), d.end());
  if (*mx - *mn <= 1e-15 * *mx) {
    DecayFit flat;
    flat.beta = std::numeric_limits<double>::infinity();
    flat.d0 = d.front();
    return flat;
  }

  // log-linear start, then LM on D0 exp(m N) with p = (ln D0, m)
  const std::size_t m = n.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += n[i];
    sy += std::log(d[i]);
    sxx += n[i] * n[i];
    sxy += n[i] * std::log(d[i]);
  }
  const double denom = m * sxx - sx * sx;
  Eigen::VectorXd p0(2);
  p0[1] = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  p0[0] = (sy - p0[1] * sx) / static_cast<double>(m);

  levmar::ResidualFn residual = [&](const Eigen::VectorXd& p,
                                    Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < m; ++i)
      r[i] = std::exp(p[0] + p[1] * n[i]) - d[i];
  };
  const levmar::Result res = levmar::minimize(residual, p0, m);

  DecayFit fit;
  fit.d0 = std::exp(res.params[0]);
  fit.d0_err = fit.d0 * std::sqrt(std::max(res.covariance(0, 0), 0.0));
  const double slope = res.params[1];
  const double slope_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
  if (slope == 0.0) {
    fit.beta = std::numeric_limits<double>::infinity();
  } else {
    fit.beta = -1.0 / slope;
    fit.beta_err = slope_err / (slope * slope);
  }
  return fit;
}

double fidelity_from_beta(double beta) {
  if (std::isinf(beta)) return 1.0;
  if (!(beta > 0.0))
    throw ConfigError("fidelity_from_beta: beta must be positive or infinite");
  return std::exp(-0.5 / beta);
}

// ---------------------------------------------------------------------------
// single-sine fit

SingleSineFit fit_single_sine(const TimeTrace& trace) {
  check_trace(trace, 8);
  SingleSineFit fit;
  fit.input_hash = trace_hash(trace);

  const Spectrum spec = fft_spectrum(trace);
  double mean = std::accumulate(trace.value.begin(), trace.value.end(), 0.0) /
                static_cast<double>(trace.value.size());
  double peak_mag = 0.0;
  std::size_t peak_k = 0;
  for (std::size_t k = 1; k < spec.magnitude.size(); ++k)
    if (spec.magnitude[k] > peak_mag) {
      peak_mag = spec.magnitude[k];
      peak_k = k;
    }

  const double scale = std::max(std::abs(mean), 1.0);
  if (peak_mag < 1e-9 * scale) {
    fit.amplitude = 0.0;
    fit.offset = mean;
    fit.amplitude_undetermined = true;
    return fit;
  }

  // prescan: require a single dominant component.  Use a Hann-windowed,
  // demeaned copy so rectangular-window leakage from a pure sine landing
  // between bins cannot masquerade as a second component.
  TimeTrace windowed = trace;
  const std::size_t nw = windowed.value.size();
  for (std::size_t k = 0; k < nw; ++k) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * M_PI * k / static_cast<double>(nw - 1));
    windowed.value[k] = (windowed.value[k] - mean) * w;
  }
  const Spectrum hspec = fft_spectrum(windowed);
  std::size_t hpeak_k = 0;
  double hpeak_mag = 0.0;
  for (std::size_t k = 1; k < hspec.magnitude.size(); ++k)
    if (hspec.magnitude[k] > hpeak_mag) {
      hpeak_mag = hspec.magnitude[k];
      hpeak_k = k;
    }
  double sidelobe = 0.0;
  for (std::size_t k = 1; k + 1 < hspec.magnitude.size(); ++k) {
    if (k + 2 >= hpeak_k && k <= hpeak_k + 2) continue;  // Hann main lobe
    if (hspec.magnitude[k] >= hspec.magnitude[k - 1] &&
        hspec.magnitude[k] > hspec.magnitude[k + 1])
      sidelobe = std::max(sidelobe, hspec.magnitude[k]);
  }
  if (sidelobe > 0.0 && hpeak_mag / sidelobe < 3.0) {
    const double peak_mag_ratio = hpeak_mag / sidelobe;
    std::ostringstream os;
    os << "fit_single_sine: spectrum is multi-modal (peak-to-sidelobe "
       << peak_mag_ratio << " < 3); use fit_multifreq";
    throw FitFailureError(os.str());
  }

  // parabolic interpolation of the peak bin for the frequency start
  double f_start = spec.freq_hz[peak_k];
  if (peak_k > 0 && peak_k + 1 < spec.magnitude.size()) {
    const double ym = spec.magnitude[peak_k - 1];
    const double y0 = spec.magnitude[peak_k];
    const double yp = spec.magnitude[peak_k + 1];
    const double den = ym - 2.0 * y0 + yp;
    if (den != 0.0) {
      const double shift = 0.5 * (ym - yp) / den;
      f_start += shift * (spec.freq_hz[1] - spec.freq_hz[0]);
    }
  }

  const std::size_t m = trace.tau_s.size();
  // p = [f, Gamma, F0, P, Q]
  levmar::ResidualFn residual = [&](const Eigen::VectorXd& p,
                                    Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < m; ++i) {
      const double w = 2.0 * M_PI * p[0] * trace.tau_s[i];
      r[i] = std::exp(-p[1] * trace.tau_s[i]) *
                 (p[3] * std::sin(w) + p[4] * std::cos(w)) +
             p[2] - trace.value[i];
    }
  };
  Eigen::VectorXd p0(5);
  p0 << f_start, 0.0, mean, 0.0, 0.0;
  {
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = 2.0 * M_PI * f_start * trace.tau_s[i];
      ps += (trace.value[i] - mean) * std::sin(w);
      qs += (trace.value[i] - mean) * std::cos(w);
    }
    p0[3] = 2.0 * ps / static_cast<double>(m);
    p0[4] = 2.0 * qs / static_cast<double>(m);
  }

  levmar::Options opts;
  opts.relative_cost_tol = 1e-12;
  const levmar::Result res = levmar::minimize(residual, p0, m, nullptr, opts);

  fit.freq_hz = std::abs(res.params[0]);
  fit.freq_err_hz = std::sqrt(std::max(res.covariance(0, 0), 0.0));
  fit.gamma = res.params[1];
  fit.offset = res.params[2];
  fit.amplitude = std::hypot(res.params[3], res.params[4]);
  fit.phase = std::atan2(res.params[4], res.params[3]);
  return fit;
}

}  // namespace pumpkit::analysis
