#include "qdyne/reconstruction.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace qdyne {

namespace {

constexpr double kPi = std::numbers::pi;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

double model_contrast(const AmplitudeModel& m, double rabi) {
  return m.damping * contrast(InteractionParams::make(rabi, m.detuning_rad_per_s, m.tau_s));
}

double contrast_slope(const AmplitudeModel& m, double rabi) {
  const double h = 1e-6 * std::max(rabi, 1.0 / m.tau_s);
  const double lo = std::max(rabi - h, 0.0);
  return (model_contrast(m, rabi + h) - model_contrast(m, lo)) / (rabi + h - lo);
}

struct Branch {
  double lo = 0.0;
  double hi = 0.0;
};

// Monotone segment of Ω0 ↦ contrast that contains `rabi_ref`.
Branch monotone_branch(const AmplitudeModel& m, double rabi_ref) {
  const double period = kTwoPi / m.tau_s;
  double span = std::max(rabi_ref, 0.0) + period;
  constexpr int kGrid = 4096;
  for (int attempt = 0; attempt < 6; ++attempt, span *= 2.0) {
    const double step = span / kGrid;
    std::vector<double> f(kGrid + 1);
    for (int i = 0; i <= kGrid; ++i) f[static_cast<std::size_t>(i)] = model_contrast(m, i * step);

    std::vector<double> extrema{0.0};
    for (int i = 1; i < kGrid; ++i) {
      const double a = f[static_cast<std::size_t>(i - 1)], b = f[static_cast<std::size_t>(i)],
                   c = f[static_cast<std::size_t>(i + 1)];
      const bool is_max = b >= a && b > c;
      const bool is_min = b <= a && b < c;
      if (!is_max && !is_min) continue;
      const double sgn = is_max ? -1.0 : 1.0;
      const auto r = boost::math::tools::brent_find_minima(
          [&](double x) { return sgn * model_contrast(m, x); }, (i - 1) * step, (i + 1) * step, 40);
      extrema.push_back(r.first);
    }
    const auto above = std::upper_bound(extrema.begin(), extrema.end(), rabi_ref);
    if (above != extrema.end()) return {*(above - 1), *above};
  }
  throw OutOfDynamicRange("no monotone contrast branch found around the calibration point");
}

}  // namespace

FrequencyEstimate estimate_frequency(const LorentzianFit& fit, const LocalOscillator& lo) {
  FrequencyEstimate e;
  e.beat_hz = fit.center_hz;
  e.ci_hz = fit.ci95.center_hz;
  e.above_hz = lo.frequency_hz() + fit.center_hz;
  e.below_hz = lo.frequency_hz() - fit.center_hz;
  return e;
}

AmplitudeModel amplitude_model(const PhotonTrace& trace, double detuning_rad_per_s) {
  AmplitudeModel m;
  m.gamma_rad_per_s_per_t = trace.sensor.gamma_rad_per_s_per_t;
  m.detuning_rad_per_s = detuning_rad_per_s;
  m.tau_s = trace.config.tau_s;
  m.damping = trace.config.dephasing ? dephasing_factor(trace.config.tau_s, trace.sensor.t2_star_s) : 1.0;
  return m;
}

AmplitudeCalibration calibrate_amplitude(const PhotonTrace& reference, std::size_t window_bins) {
  return calibrate_amplitude(fft_trace(reference), reference, window_bins);
}

AmplitudeCalibration calibrate_amplitude(const Spectrum& spec, const PhotonTrace& reference,
                                         std::size_t window_bins) {
  if (reference.truth.size() != 1)
    throw InvalidArgument("calibration needs a reference trace with exactly one known tone");
  const SignalField& tone = reference.truth.front();
  const InteractionParams p = InteractionParams::from_field(tone, reference.sensor, reference.config.tau_s);
  const double c = amplitude_model(reference, p.detuning()).damping * contrast(p);
  if (!(c > 0.0)) throw InvalidArgument("reference signal produces no contrast");
  const LorentzianFit fit = fit_peak(spec, window_bins);
  return {fit.amplitude / (static_cast<double>(spec.n_samples) * c), p.rabi() * p.tau()};
}

AmplitudeCalibration model_calibration(const Sensor& sensor, double reference_rotation) {
  return {(sensor.bright_rate - sensor.dark_rate) / 4.0, reference_rotation};
}

double invert_contrast(double c, double c_ci, const AmplitudeModel& model, double reference_rotation) {
  if (!(model.tau_s > 0.0)) throw InvalidArgument("amplitude model needs tau > 0");
  if (c <= 0.0) return 0.0;
  const double rabi_ref = std::max(reference_rotation, 0.0) / model.tau_s;
  const Branch br = monotone_branch(model, rabi_ref);
  const double f_lo = model_contrast(model, br.lo);
  const double f_hi = model_contrast(model, br.hi);
  const double f_min = std::min(f_lo, f_hi), f_max = std::max(f_lo, f_hi);
  const double slack = std::max(c_ci, 0.0);
  if (c > f_max) {
    if (c - f_max > slack) throw OutOfDynamicRange("contrast above the calibrated branch maximum");
    return f_hi >= f_lo ? br.hi : br.lo;
  }
  if (c < f_min) {
    if (f_min - c > slack) throw OutOfDynamicRange("contrast below the calibrated branch minimum");
    return f_hi <= f_lo ? br.hi : br.lo;
  }
  auto g = [&](double x) { return model_contrast(model, x) - c; };
  if (g(br.lo) == 0.0) return br.lo;
  if (g(br.hi) == 0.0) return br.hi;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, br.lo, br.hi, boost::math::tools::eps_tolerance<double>(50),
                                                   iters);
  return 0.5 * (r.first + r.second);
}

AmplitudeEstimate estimate_amplitude(const LorentzianFit& fit, std::size_t n_samples,
                                     const AmplitudeCalibration& cal, const AmplitudeModel& model) {
  if (!(cal.gain > 0.0)) throw InvalidArgument("calibration gain must be > 0");
  if (n_samples == 0) throw InvalidArgument("no samples");
  const double scale = cal.gain * static_cast<double>(n_samples);
  AmplitudeEstimate e;
  e.contrast = fit.amplitude / scale;
  e.contrast_ci = fit.ci95.amplitude / scale;
  e.rabi_rad_per_s = invert_contrast(e.contrast, e.contrast_ci, model, cal.reference_rotation);
  e.tesla = field_from_rabi(e.rabi_rad_per_s, model.gamma_rad_per_s_per_t);
  const double slope = std::abs(contrast_slope(model, e.rabi_rad_per_s));
  e.ci_tesla = slope > 0.0 ? e.contrast_ci / slope / model.gamma_rad_per_s_per_t
                           : std::numeric_limits<double>::infinity();
  return e;
}

NoiseFloor noise_floor(const Spectrum& spec, const LorentzianFit& fit, const AmplitudeCalibration& cal,
                       const AmplitudeModel& model) {
  NoiseFloor nf;
  const std::size_t begin = fit.window_begin, end = std::min(fit.window_end, spec.size());
  if (end > begin + 1) {
    double ss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double r = spec.magnitude(k) - fit.evaluate(spec.frequency_hz(k));
      ss += r * r;
    }
    nf.raw_rms = std::sqrt(ss / static_cast<double>(end - begin - 1));
  } else {
    nf.raw_rms = fit.residual_noise;
  }
  const double c = nf.raw_rms / (cal.gain * static_cast<double>(spec.n_samples));
  try {
    nf.tesla = field_from_rabi(invert_contrast(c, 0.0, model, 0.0), model.gamma_rad_per_s_per_t);
  } catch (const OutOfDynamicRange&) {
    nf.tesla = std::numeric_limits<double>::quiet_NaN();
  }
  return nf;
}

PhaseEstimate estimate_phase(const Spectrum& spec, const LorentzianFit& fit, const PhaseModel& model) {
  const double u0 = fit.center_hz / spec.bin_width_hz;
  const double kf = std::floor(u0);
  const std::size_t last = spec.size() - 1;
  const std::size_t top = spec.n_samples % 2 == 0 ? last - 1 : last;  // highest non-Nyquist bin
  if (!(kf >= 1.0) || kf + 1.0 > static_cast<double>(top))
    throw PeakOnBoundary("phase interpolation needs two bins away from DC and Nyquist");
  const auto k = static_cast<std::size_t>(kf);
  const double w = u0 - kf;
  const double n = static_cast<double>(spec.n_samples);

  // A rectangular-window tone's argument drops by π(1 − 1/N) from one bin to the next.
  const double step = -kPi * (1.0 - 1.0 / n);
  const double a0 = std::arg(spec.bins[k]);
  const double a1 = a0 + step + wrap_phase(std::arg(spec.bins[k + 1]) - a0 - step);
  double beat = (1.0 - w) * a0 + w * a1;

  PhaseEstimate e;
  e.raw_rad = wrap_phase(beat);
  if (model.counts_inverted) beat -= kPi;
  if (model.sign < 0) beat = -beat;
  e.offset_rad = model.apply_offset ? beat_phase_offset(model.params) : 0.0;
  e.phase_rad = wrap_phase(beat - e.offset_rad);

  // Rayleigh-distributed magnitudes: std = σ_c √(2 − π/2).
  const double sigma_c = fit.residual_noise / std::sqrt(2.0 - kPi / 2.0);
  const double m0 = std::abs(spec.bins[k]), m1 = std::abs(spec.bins[k + 1]);
  // a phase error never exceeds π, and an empty neighbour carries almost no weight
  const double s0 = m0 > 0.0 ? std::min(sigma_c / m0, kPi) : kPi;
  const double s1 = m1 > 0.0 ? std::min(sigma_c / m1, kPi) : kPi;
  const double su = fit.ci95.center_hz / 1.96 / spec.bin_width_hz;
  const double var = (1.0 - w) * (1.0 - w) * s0 * s0 + w * w * s1 * s1 + (a1 - a0) * (a1 - a0) * su * su;
  e.ci_rad = 1.96 * std::sqrt(var);
  return e;
}

std::vector<LorentzianFit> find_peaks(const Spectrum& spec, const PeakSearch& opts) {
  std::vector<LorentzianFit> out;
  if (spec.size() < 3) return out;
  const std::vector<double> mag = spec.magnitudes();
  const std::vector<double> body(mag.begin() + 1, mag.end());
  const double base = median_of(body);
  std::vector<double> dev(body.size());
  std::transform(body.begin(), body.end(), dev.begin(), [&](double v) { return std::abs(v - base); });
  const double sigma = 1.4826 * median_of(dev);
  const double strongest = *std::max_element(body.begin(), body.end());
  const double threshold = std::max(base + opts.threshold_sigma * sigma, opts.min_relative * strongest);

  const std::size_t last = spec.size() - 1;
  std::vector<std::size_t> cand;
  for (std::size_t k = 1; k <= last; ++k) {
    if (mag[k] <= threshold) continue;
    const bool left = k == 1 || mag[k] > mag[k - 1];
    const bool right = k == last || mag[k] >= mag[k + 1];
    if (left && right) cand.push_back(k);
  }

  for (std::size_t i = 0; i < cand.size(); ++i) {
    const std::size_t c = cand[i];
    std::size_t lo = i > 0 ? (cand[i - 1] + c) / 2 + 1 : 1;
    std::size_t hi = i + 1 < cand.size() ? (c + cand[i + 1]) / 2 + 1 : spec.size();
    if (hi - lo < 5) {
      lo = c > 3 ? c - 2 : 1;
      hi = std::min(spec.size(), lo + 5);
    }
    try {
      LorentzianFit f = fit_peak_at(spec, c, opts.window_bins, lo, hi);
      // a fit that wandered off its local maximum describes a neighbour, not this peak
      if (std::abs(f.center_hz / spec.bin_width_hz - static_cast<double>(c)) > 1.0)
        throw FitError(FitError::Kind::NotConverged, "fit left its peak");
      out.push_back(f);
    } catch (const Error&) {
      LorentzianFit raw;
      raw.amplitude = mag[c] - base;
      raw.center_hz = spec.frequency_hz(c);
      raw.hwhm_hz = spec.bin_width_hz;
      raw.offset = base;
      raw.window_begin = lo;
      raw.window_end = hi;
      out.push_back(raw);
    }
  }
  return out;
}

ReconstructionResult reconstruct(const PhotonTrace& trace, const AnalysisOptions& opts) {
  return reconstruct(trace, fft_trace(trace), opts);
}

ReconstructionResult reconstruct(const PhotonTrace& trace, const Spectrum& spec, const AnalysisOptions& opts) {
  ReconstructionResult r;
  if (opts.fit_center_hz) {
    const double k = std::round(*opts.fit_center_hz / spec.bin_width_hz);
    if (!(k >= 1.0 && k < static_cast<double>(spec.size())))
      throw InvalidArgument("fit centre outside the spectrum");
    r.fit = fit_peak_at(spec, static_cast<std::size_t>(k), opts.window_bins, 1, spec.size());
  } else {
    r.fit = fit_peak(spec, opts.window_bins);
  }
  const FrequencyEstimate fe = estimate_frequency(r.fit, trace.lo);
  r.sign_resolved = opts.sign.has_value();
  r.sign = opts.sign.value_or(1) < 0 ? -1 : 1;
  r.beat_hz = fe.beat_hz;
  r.frequency_hz = r.sign > 0 ? fe.above_hz : fe.below_hz;
  r.frequency_ci_hz = fe.ci_hz;

  const double detuning = kTwoPi * (r.frequency_hz - trace.sensor.resonance_hz);
  const AmplitudeModel model = amplitude_model(trace, detuning);
  const AmplitudeCalibration cal = opts.calibration.value_or(model_calibration(trace.sensor));
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  try {
    const AmplitudeEstimate amp = estimate_amplitude(r.fit, spec.n_samples, cal, model);
    r.amplitude_tesla = amp.tesla;
    r.amplitude_ci_tesla = amp.ci_tesla;

    PhaseModel pm;
    pm.params = InteractionParams::make(amp.rabi_rad_per_s, detuning, trace.config.tau_s);
    pm.sign = r.sign;
    pm.counts_inverted = trace.sensor.bright_rate > trace.sensor.dark_rate;
    pm.apply_offset = opts.correct_theta;
    const PhaseEstimate ph = estimate_phase(spec, r.fit, pm);
    r.phase_rad = ph.phase_rad;
    r.phase_ci_rad = ph.ci_rad;
    r.theta_correction_rad = ph.offset_rad;
  } catch (const OutOfDynamicRange& e) {
    r.amplitude_tesla = r.amplitude_ci_tesla = kNaN;
    r.phase_rad = r.phase_ci_rad = r.theta_correction_rad = kNaN;
    r.warnings.push_back(std::string("amplitude and phase skipped: ") + e.what());
  }

  const NoiseFloor nf = noise_floor(spec, r.fit, cal, model);
  r.noise_raw = nf.raw_rms;
  r.noise_tesla = nf.tesla;
  return r;
}

namespace {

nlohmann::ordered_json fit_json(const LorentzianFit& f) {
  return {{"amplitude", f.amplitude},
          {"center_hz", f.center_hz},
          {"hwhm_hz", f.hwhm_hz},
          {"offset", f.offset},
          {"ci95",
           {{"amplitude", f.ci95.amplitude},
            {"center_hz", f.ci95.center_hz},
            {"hwhm_hz", f.ci95.hwhm_hz},
            {"offset", f.ci95.offset}}},
          {"residual_noise", f.residual_noise},
          {"window", {f.window_begin, f.window_end}},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"width_resolved", f.width_resolved}};
}

}  // namespace

std::string to_json(const LorentzianFit& f, int indent) { return fit_json(f).dump(indent); }

std::string to_json(const ReconstructionResult& r, int indent) {
  nlohmann::ordered_json j = {{"frequency_hz", r.frequency_hz},
                              {"frequency_ci_hz", r.frequency_ci_hz},
                              {"beat_hz", r.beat_hz},
                              {"amplitude_tesla", r.amplitude_tesla},
                              {"amplitude_ci_tesla", r.amplitude_ci_tesla},
                              {"phase_rad", r.phase_rad},
                              {"phase_ci_rad", r.phase_ci_rad},
                              {"theta_correction_rad", r.theta_correction_rad},
                              {"sign_resolved", r.sign_resolved},
                              {"sign", r.sign},
                              {"noise_raw", r.noise_raw},
                              {"noise_tesla", r.noise_tesla},
                              {"fit", fit_json(r.fit)},
                              {"warnings", r.warnings}};
  return j.dump(indent);
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
  const auto old_precision = os.precision(17);
  os << "bin_hz,re,im,magnitude\n";
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& x = spec.bins[k];
    os << spec.frequency_hz(k) << ',' << x.real() << ',' << x.imag() << ',' << std::abs(x) << '\n';
  }
  os.precision(old_precision);
}

}  // namespace qdyne
