#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <qdyne/reconstruction.hpp>

using namespace qdyne;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup1 {
  SequenceConfig cfg;
  LocalOscillator lo;
  Sensor sensor;
  SignalField signal;
  PhotonTrace header;
};

// beat `beat_hz` above the LO; sensor detuned by `detuning_hz` from the signal
Setup1 make_setup(double field, double beat_hz, double phase, double detuning_hz = 0.0, double tau = 1.404e-6,
                  bool bright = false) {
  Setup1 s;
  s.cfg.tau_s = tau;
  if (bright) {
    s.sensor.bright_rate = 4.0;
    s.sensor.dark_rate = 2.0;
  }
  s.lo = make_lo(1.51082e9, s.cfg.sequence_length_s);
  const double nu = s.lo.frequency_hz() + beat_hz;
  s.sensor.resonance_hz = nu - detuning_hz;
  s.signal = SignalField{field, nu, phase};
  s.header.config = s.cfg;
  s.header.lo = s.lo;
  s.header.sensor = s.sensor;
  s.header.truth = {s.signal};
  return s;
}

PhotonTrace draw(const Setup1& s, std::size_t n, std::uint64_t seed) {
  const std::vector<SignalField> sig{s.signal};
  return simulate_trace(sig, s.sensor, s.cfg, s.lo, n, seed, 1);
}

AmplitudeCalibration reference(const Setup1& s, std::size_t n) {
  const std::vector<SignalField> sig{s.signal};
  const MultiToneSeries series = multi_tone_series(sig, s.sensor, s.cfg, s.lo, n, 1);
  return calibrate_amplitude(fft_series(expected_counts(series.population, s.sensor), s.cfg.sequence_length_s), s.header);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST(Statistics, ResidualNoiseMatchesRayleighScatter) {
  // |X| of a Poisson bin is Rayleigh with σ² = nλ/2 per component
  const std::size_t n = 30000;
  const Setup1 s = make_setup(1e-6, 20005.0, 0.3);
  AnalysisOptions o;
  o.sign = 1;
  o.fit_center_hz = 20005.0;
  o.correct_theta = false;
  std::vector<double> raw, mean_counts;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const PhotonTrace t = draw(s, n, seed);
    double m = 0.0;
    for (auto c : t.counts) m += c;
    mean_counts.push_back(m / static_cast<double>(n));
    raw.push_back(reconstruct(t, o).noise_raw);
  }
  double lambda = 0.0;
  for (double v : mean_counts) lambda += v;
  lambda /= static_cast<double>(mean_counts.size());
  double avg = 0.0;
  for (double v : raw) avg += v;
  avg /= static_cast<double>(raw.size());
  EXPECT_NEAR(avg, std::sqrt(static_cast<double>(n) * lambda * (1.0 - kPi / 4.0)),
              0.1 * std::sqrt(static_cast<double>(n) * lambda * (1.0 - kPi / 4.0)));
}

TEST(Statistics, ConfidenceIntervalCoverage) {
  const std::size_t n = 30000;
  // detectable at every seed; half-bin beat so the centre is unbiased
  const Setup1 s = make_setup(2e-6, 20005.0, 0.7, 0.0, 1.404e-6, true);
  AnalysisOptions o;
  o.sign = 1;
  o.calibration = reference(s, n);
  const int runs = 60;
  int f_in = 0, a_in = 0, p_in = 0, ok = 0;
  for (int seed = 1; seed <= runs; ++seed) {
    try {
      const ReconstructionResult r = reconstruct(draw(s, n, static_cast<std::uint64_t>(seed)), o);
      ++ok;
      f_in += std::abs(r.frequency_hz - s.signal.frequency_hz) <= r.frequency_ci_hz;
      a_in += std::abs(r.amplitude_tesla - s.signal.amplitude_tesla) <= r.amplitude_ci_tesla;
      p_in += std::abs(wrap_phase(r.phase_rad - s.signal.phase_rad)) <= r.phase_ci_rad;
    } catch (const Error&) {
    }
  }
  ASSERT_GE(ok, 55);
  const double need = 0.85 * ok;
  EXPECT_GE(f_in, need) << f_in << "/" << ok;
  EXPECT_GE(a_in, need) << a_in << "/" << ok;
  EXPECT_GE(p_in, need) << p_in << "/" << ok;
}

TEST(Statistics, ThetaCorrectionRemovesDetuningBias) {
  // Δ = Ω0 and Ω_sig τ = π/2
  const double tau = 1.404e-6;
  const double rabi = kPi / (2.0 * std::sqrt(2.0) * tau);
  const double field = field_from_rabi(rabi, kGammaNv);
  const std::size_t n = 30000;
  for (double phi0 : {-2.0, 0.4, 1.9}) {
    const Setup1 s = make_setup(field, 20005.0, phi0, rabi / (2.0 * kPi), tau, true);
    const InteractionParams p = InteractionParams::from_field(s.signal, s.sensor, tau);
    ASSERT_NEAR(p.rotation_angle(), kPi / 2.0, 1e-9);
    const double offset = beat_phase_offset(p);
    ASSERT_NEAR(std::abs(offset), 0.6155, 1e-4);
    AnalysisOptions on;
    on.sign = 1;
    AnalysisOptions off = on;
    off.correct_theta = false;
    const PhotonTrace t = draw(s, n, 7);
    const ReconstructionResult a = reconstruct(t, on);
    const ReconstructionResult b = reconstruct(t, off);
    EXPECT_NEAR(wrap_phase(a.phase_rad - phi0), 0.0, 3.0 * a.phase_ci_rad) << phi0;
    EXPECT_NEAR(wrap_phase(b.phase_rad - phi0 - offset), 0.0, 3.0 * b.phase_ci_rad) << phi0;
    EXPECT_GT(std::abs(wrap_phase(b.phase_rad - phi0)), 3.0 * b.phase_ci_rad);
    // the correction uses the estimated amplitude
    EXPECT_NEAR(a.theta_correction_rad, offset, 0.1);
  }
}

TEST(Statistics, FwhmShrinksAcrossDoublingLadder) {
  // δ·T0 a third of a bin: the doubling map alternates between mirror positions 1/3 and 2/3
  const std::size_t n0 = 30000;
  const Setup1 s = make_setup(1e-6, 20000.0 + 10.0 / 3.0, 0.0);
  const std::vector<SignalField> sig{s.signal};
  const MultiToneSeries series = multi_tone_series(sig, s.sensor, s.cfg, s.lo, 16 * n0, 1);
  const std::vector<double> counts = expected_counts(series.population, s.sensor);
  double prev = 1e300;
  for (std::size_t n = n0; n <= 16 * n0; n *= 2) {
    const Spectrum spec = fft_series(std::span<const double>(counts.data(), n), s.cfg.sequence_length_s);
    const LorentzianFit f = fit_peak(spec);
    EXPECT_TRUE(f.width_resolved);
    EXPECT_LT(f.fwhm_hz(), prev) << n;
    EXPECT_NEAR(f.fwhm_hz() * static_cast<double>(n) * s.cfg.sequence_length_s, 1.0, 0.5);
    prev = f.fwhm_hz();
  }
}

TEST(Statistics, NoisyFwhmMedianShrinks) {
  const Setup1 s = make_setup(2e-6, 20000.0 + 10.0 / 3.0, 0.0, 0.0, 1.404e-6, true);
  double prev = 1e300;
  for (std::size_t n : {30000u, 60000u, 120000u}) {
    std::vector<double> w;
    for (std::uint64_t seed = 1; seed <= 9; ++seed) {
      try {
        const LorentzianFit f = fit_peak(fft_trace(draw(s, n, seed)));
        if (f.width_resolved) w.push_back(f.fwhm_hz());
      } catch (const FitError&) {
      }
    }
    ASSERT_GE(w.size(), 7u);
    const double m = median(w);
    EXPECT_LT(m, prev) << n;
    prev = m;
  }
}
