#include "qdyne/harness/runner.hpp"

#include <json.hpp>

#include <qdyne/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace qdyne::harness {

using Json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Runs fn(i) for i in [0, n) on a small pool; results must be written by index.
template <typename Fn>
void for_each_index(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

Json finite(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json slope_json(const SlopeFit& f) {
  return {{"slope", finite(f.slope)}, {"stderr", finite(f.stderr_slope)}, {"points", f.points}};
}

Json measurement_json(const Measurement& m) {
  return {{"lo_frequency_hz", m.lo.frequency_hz()},
          {"sequence_length_s", m.lo.sequence_length_s},
          {"tau_s", m.tau_s},
          {"beat_hz", m.beat_hz},
          {"beat_ci_hz", m.beat_ci_hz},
          {"contrast", m.contrast},
          {"contrast_ci", m.contrast_ci},
          {"beat_phase_rad", m.beat_phase_rad},
          {"phase_ci_rad", m.phase_ci_rad}};
}

Json timings(double seconds) { return {{"wall_s", seconds}}; }

struct Setup {
  SequenceConfig cfg;
  LocalOscillator lo;
};

Setup modified_setup(const Scenario& s, const std::optional<PairSpec>& mod) {
  Setup out{s.sequence, s.local_oscillator()};
  if (!mod) return out;
  switch (mod->kind) {
    case PairSpec::Kind::LoShift:
      out.lo = out.lo.shifted(-mod->value);
      break;
    case PairSpec::Kind::SequenceStretch: {
      const double f = out.lo.frequency_hz();
      out.cfg.sequence_length_s += mod->value;
      out.lo.sequence_length_s = out.cfg.sequence_length_s;
      out.lo.offset_hz = f - static_cast<double>(out.lo.n_lo) / out.lo.sequence_length_s;
      break;
    }
    case PairSpec::Kind::TauChange:
      out.cfg.tau_s = mod->value;
      break;
  }
  return out;
}

}  // namespace

PhotonTrace trace_header(const Scenario& s) {
  PhotonTrace h;
  h.config = s.sequence;
  h.lo = s.local_oscillator();
  h.sensor = s.sensor;
  h.truth = s.signals;
  return h;
}

PhotonTrace simulate(const Scenario& s, std::uint64_t seed, unsigned threads) {
  return simulate_trace(s.signals, s.sensor, s.sequence, s.local_oscillator(), s.n_sequences, seed, threads);
}

Spectrum noiseless_spectrum(const Scenario& s, std::size_t n, unsigned threads) {
  const MultiToneSeries series = multi_tone_series(s.signals, s.sensor, s.sequence, s.local_oscillator(), n, threads);
  return fft_series(expected_counts(series.population, s.sensor), s.sequence.sequence_length_s);
}

AmplitudeCalibration calibration_for(const Scenario& s, std::size_t n, unsigned threads) {
  const CalibrationConfig& c = s.analysis.calibration;
  if (c.kind == CalibrationConfig::Kind::Model) return model_calibration(s.sensor);
  Scenario ref = s;
  ref.signals = {c.signal.value_or(s.signals.front())};
  const std::size_t nref = c.n_sequences.value_or(n);
  return calibrate_amplitude(noiseless_spectrum(ref, nref, threads), trace_header(ref), s.analysis.window_bins);
}

AnalysisOptions analysis_options(const Scenario& s, const AmplitudeCalibration& cal) {
  const AnalysisConfig& a = s.analysis;
  AnalysisOptions o;
  o.window_bins = a.window_bins;
  o.sign = a.sign;
  o.calibration = cal;
  o.correct_theta = a.correct_theta;
  if (a.fit_at_signal) o.fit_center_hz = beat_note(s.local_oscillator(), s.signals.front().frequency_hz).magnitude_hz;
  return o;
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  SlopeFit f;
  f.points = lx.size();
  if (lx.size() < 2) {
    f.slope = f.stderr_slope = kNaN;
    return f;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - my - f.slope * (lx[i] - mx);
    rss += r * r;
  }
  f.stderr_slope = lx.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : kNaN;
  return f;
}

ScalingResult run_scaling(const Scenario& s, unsigned threads) {
  if (!s.scaling) throw ConfigError("/scaling", "scenario has no scaling section");
  const std::vector<double>& times = s.scaling->times_s;
  if (times.size() < 5) throw InsufficientLadder("a scaling ladder needs at least 5 total times, got " +
                                                 std::to_string(times.size()));
  const double t_l = s.sequence.sequence_length_s;
  std::vector<std::size_t> ns;
  for (double t : times) ns.push_back(static_cast<std::size_t>(std::llround(t / t_l)));
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 16) throw ConfigError("/scaling/times_s/" + std::to_string(i), "rung shorter than 16 sequences");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ConfigError("/scaling/times_s", "times must increase");
  }
  const std::size_t n_max = ns.back();

  std::vector<AmplitudeCalibration> cals;
  for (std::size_t n : ns) cals.push_back(calibration_for(s, n, threads));
  const AnalysisOptions base = analysis_options(s, {});
  const PhotonTrace header = trace_header(s);
  const double f_true = s.signals.front().frequency_hz;

  const MultiToneSeries series = multi_tone_series(s.signals, s.sensor, s.sequence, header.lo, n_max, threads);
  const bool noiseless = s.scaling->noiseless;
  const std::vector<double> expected = noiseless ? expected_counts(series.population, s.sensor) : std::vector<double>{};
  const std::size_t n_runs = noiseless ? 1 : s.seeds.size();

  struct Sample {
    bool ok = false;
    double fci = kNaN, fwhm = kNaN, aci = kNaN, pci = kNaN, nt = kNaN, nr = kNaN, ferr = kNaN;
  };
  std::vector<std::vector<Sample>> samples(n_runs, std::vector<Sample>(ns.size()));
  for_each_index(n_runs, threads, [&](std::size_t r) {
    std::vector<double> record;
    if (noiseless) {
      record = expected;
    } else {
      const PhotonTrace tr = sample_photons(series.population, s.sensor, s.seeds[r], 1);
      record.assign(tr.counts.begin(), tr.counts.end());
    }
    for (std::size_t k = 0; k < ns.size(); ++k) {
      Sample& out = samples[r][k];
      try {
        const Spectrum spec = fft_series(std::span(record.data(), ns[k]), t_l);
        AnalysisOptions o = base;
        o.calibration = cals[k];
        const ReconstructionResult res = reconstruct(header, spec, o);
        out = {true, res.frequency_ci_hz, res.fit.fwhm_hz(), res.amplitude_ci_tesla, res.phase_ci_rad,
               res.noise_tesla, res.noise_raw, std::abs(res.frequency_hz - f_true)};
      } catch (const Error&) {
        out.ok = false;
      }
    }
  });

  ScalingResult result;
  std::vector<double> t_used, fci, fwhm, aci, pci, nt;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    RungSummary rs;
    rs.n_sequences = ns[k];
    rs.time_s = static_cast<double>(ns[k]) * t_l;
    std::vector<double> v[7];
    for (std::size_t r = 0; r < n_runs; ++r) {
      const Sample& x = samples[r][k];
      if (!x.ok) {
        ++rs.failures;
        continue;
      }
      ++rs.runs;
      const double vals[7] = {x.fci, x.fwhm, x.aci, x.pci, x.nt, x.nr, x.ferr};
      for (int i = 0; i < 7; ++i) v[i].push_back(vals[i]);
    }
    rs.frequency_ci_hz = median(v[0]);
    rs.fwhm_hz = median(v[1]);
    rs.amplitude_ci_tesla = median(v[2]);
    rs.phase_ci_rad = median(v[3]);
    rs.noise_tesla = median(v[4]);
    rs.noise_raw = median(v[5]);
    rs.frequency_error_hz = median(v[6]);
    result.rungs.push_back(rs);
    t_used.push_back(rs.time_s);
    fci.push_back(rs.frequency_ci_hz);
    fwhm.push_back(rs.fwhm_hz);
    aci.push_back(rs.amplitude_ci_tesla);
    pci.push_back(rs.phase_ci_rad);
    nt.push_back(rs.noise_tesla);
  }
  result.slopes.frequency_ci = loglog_slope(t_used, fci);
  result.slopes.linewidth = loglog_slope(t_used, fwhm);
  result.slopes.amplitude_ci = loglog_slope(t_used, aci);
  result.slopes.phase_ci = loglog_slope(t_used, pci);
  result.slopes.noise_floor = loglog_slope(t_used, nt);
  return result;
}

Measurement measure_scenario(const Scenario& s, const std::optional<PairSpec>& mod, bool noiseless,
                             unsigned threads) {
  const Setup st = modified_setup(s, mod);
  PhotonTrace header = trace_header(s);
  header.config = st.cfg;
  header.lo = st.lo;
  const MultiToneSeries series = multi_tone_series(s.signals, s.sensor, st.cfg, st.lo, s.n_sequences, threads);
  Spectrum spec;
  if (noiseless) {
    spec = fft_series(expected_counts(series.population, s.sensor), st.cfg.sequence_length_s);
  } else {
    const PhotonTrace tr = sample_photons(series.population, s.sensor, s.seeds.front(), threads);
    const std::vector<double> rec(tr.counts.begin(), tr.counts.end());
    spec = fft_series(rec, st.cfg.sequence_length_s);
  }
  const double gain = calibration_for(s, s.n_sequences, threads).gain;
  return measure(spec, header, gain, s.analysis.window_bins);
}

ResolveResult run_resolve(const Scenario& s, unsigned threads) {
  if (!s.resolution) throw ConfigError("/resolution", "scenario has no resolution section");
  const ResolutionConfig& rc = *s.resolution;
  ResolveResult out;
  out.primary = measure_scenario(s, std::nullopt, rc.noiseless, threads);
  for (const PairSpec& p : rc.pairs) {
    MeasurementPair pair;
    pair.first = out.primary;
    pair.second = measure_scenario(s, p, rc.noiseless, threads);
    switch (p.kind) {
      case PairSpec::Kind::LoShift: pair.modification = LoShift{p.value}; break;
      case PairSpec::Kind::SequenceStretch: pair.modification = SequenceStretch{p.value}; break;
      case PairSpec::Kind::TauChange: pair.modification = TauChange{p.value}; break;
    }
    pair.validate();
    out.pairs.push_back(pair);
  }
  ResolveAllOptions opts;
  opts.n_range = rc.n_range;
  opts.rabi_max = rc.rabi_max;
  opts.decision.margin_factor = rc.margin_factor;
  out.resolution = resolve_all(out.primary, out.pairs, s.sensor, opts);
  return out;
}

Scenario sweep_point(const Scenario& base, SweepConfig::Parameter p, double value) {
  Scenario s = base;
  const LocalOscillator lo = base.local_oscillator();
  s.lo.n_lo = lo.n_lo;
  s.lo.offset_hz = lo.offset_hz;
  switch (p) {
    case SweepConfig::Parameter::Tau: s.sequence.tau_s = value; break;
    case SweepConfig::Parameter::Detuning: s.sensor.resonance_hz = s.signals.front().frequency_hz - value; break;
    case SweepConfig::Parameter::Amplitude: s.signals.front().amplitude_tesla = value; break;
    case SweepConfig::Parameter::Frequency: s.signals.front().frequency_hz = value; break;
  }
  return s;
}

std::vector<SweepRow> run_sweep(const Scenario& s, unsigned threads) {
  if (!s.sweep) throw ConfigError("/sweep", "scenario has no sweep section");
  if (s.sweep->values.empty()) throw ConfigError("/sweep/values", "empty sweep range");
  const SweepConfig& sw = *s.sweep;
  std::vector<SweepRow> rows(sw.values.size());
  for_each_index(sw.values.size(), threads, [&](std::size_t i) {
    const Scenario sp = sweep_point(s, sw.parameter, sw.values[i]);
    sp.validate();
    SweepRow& row = rows[i];
    row.value = sw.values[i];
    const PhotonTrace header = trace_header(sp);
    const SignalField& sig = sp.signals.front();
    const InteractionParams params = InteractionParams::from_field(sig, sp.sensor, sp.sequence.tau_s);
    const AmplitudeModel model = amplitude_model(header, params.detuning());
    row.contrast_model = model.damping * contrast(params);
    const double n = static_cast<double>(sp.n_sequences);
    const AmplitudeCalibration cal = calibration_for(sp, sp.n_sequences, 1);

    const std::optional<double> center = analysis_options(sp, cal).fit_center_hz;
    const std::size_t runs = sw.noiseless ? 1 : sp.seeds.size();
    std::size_t ok = 0;
    double l0 = 0.0, l0ci = 0.0, beat = 0.0, nraw = 0.0, ntesla = 0.0;
    const MultiToneSeries series = multi_tone_series(sp.signals, sp.sensor, sp.sequence, header.lo, sp.n_sequences, 1);
    for (std::size_t r = 0; r < runs; ++r) {
      Spectrum spec;
      if (sw.noiseless) {
        spec = fft_series(expected_counts(series.population, sp.sensor), sp.sequence.sequence_length_s);
      } else {
        const PhotonTrace tr = sample_photons(series.population, sp.sensor, sp.seeds[r], 1);
        spec = fft_series(std::vector<double>(tr.counts.begin(), tr.counts.end()), sp.sequence.sequence_length_s);
      }
      try {
        const LorentzianFit fit =
            center ? fit_peak_at(spec, static_cast<std::size_t>(std::llround(*center / spec.bin_width_hz)),
                                 sp.analysis.window_bins, 1, spec.size())
                   : fit_peak(spec, sp.analysis.window_bins);
        const NoiseFloor nf = noise_floor(spec, fit, cal, model);
        l0 += fit.amplitude;
        l0ci += fit.ci95.amplitude;
        beat += fit.center_hz;
        nraw += nf.raw_rms;
        ntesla += nf.tesla;
        ++ok;
      } catch (const Error&) {
        // row keeps NaN when no run converged
      }
    }
    if (ok == 0) {
      row.peak_amplitude = row.peak_amplitude_ci = row.contrast_measured = row.beat_hz = kNaN;
      row.noise_raw = row.noise_tesla = row.sensitivity_t_per_rthz = kNaN;
      return;
    }
    const double k = static_cast<double>(ok);
    row.converged = ok == runs;
    row.peak_amplitude = l0 / k;
    row.peak_amplitude_ci = l0ci / k;
    row.contrast_measured = row.peak_amplitude / (cal.gain * n);
    row.beat_hz = beat / k;
    row.noise_raw = nraw / k;
    row.noise_tesla = ntesla / k;
    row.sensitivity_t_per_rthz = row.noise_tesla * std::sqrt(sp.total_time_s());
  });
  return rows;
}

std::string scaling_json(const Scenario& s, const ScalingResult& r, double seconds, int indent) {
  Json rungs = Json::array();
  for (const RungSummary& g : r.rungs) {
    rungs.push_back({{"time_s", g.time_s},
                     {"n_sequences", g.n_sequences},
                     {"runs", g.runs},
                     {"failures", g.failures},
                     {"frequency_ci_hz", finite(g.frequency_ci_hz)},
                     {"fwhm_hz", finite(g.fwhm_hz)},
                     {"amplitude_ci_tesla", finite(g.amplitude_ci_tesla)},
                     {"phase_ci_rad", finite(g.phase_ci_rad)},
                     {"noise_tesla", finite(g.noise_tesla)},
                     {"noise_raw", finite(g.noise_raw)},
                     {"frequency_error_hz", finite(g.frequency_error_hz)}});
  }
  Json j = {{"command", "scaling"},
            {"scenario", Json::parse(scenario_to_json(s))},
            {"aggregate", "median over seeds"},
            {"rungs", rungs},
            {"slopes",
             {{"frequency_ci", slope_json(r.slopes.frequency_ci)},
              {"linewidth", slope_json(r.slopes.linewidth)},
              {"amplitude_ci", slope_json(r.slopes.amplitude_ci)},
              {"phase_ci", slope_json(r.slopes.phase_ci)},
              {"noise_floor", slope_json(r.slopes.noise_floor)}}},
            {"timings", timings(seconds)}};
  return j.dump(indent);
}

std::string scaling_csv(const ScalingResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "time_s,n_sequences,runs,failures,frequency_ci_hz,fwhm_hz,amplitude_ci_tesla,phase_ci_rad,noise_tesla,"
        "noise_raw,frequency_error_hz\n";
  for (const RungSummary& g : r.rungs) {
    os << g.time_s << ',' << g.n_sequences << ',' << g.runs << ',' << g.failures << ',' << g.frequency_ci_hz << ','
       << g.fwhm_hz << ',' << g.amplitude_ci_tesla << ',' << g.phase_ci_rad << ',' << g.noise_tesla << ','
       << g.noise_raw << ',' << g.frequency_error_hz << '\n';
  }
  return os.str();
}

std::string resolve_json(const Scenario& s, const ResolveResult& r, double seconds, int indent) {
  Json pairs = Json::array();
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const PairSpec& p = s.resolution->pairs[i];
    pairs.push_back({{"kind", std::string(to_string(p.kind))}, {"value", p.value},
                     {"second", measurement_json(r.pairs[i].second)}});
  }
  Json truth = Json::array();
  for (const SignalField& f : s.signals)
    truth.push_back({{"amplitude_tesla", f.amplitude_tesla}, {"frequency_hz", f.frequency_hz}, {"phase_rad", f.phase_rad}});
  Json j = {{"command", "resolve"},
            {"scenario", Json::parse(scenario_to_json(s))},
            {"truth", truth},
            {"primary", measurement_json(r.primary)},
            {"pairs", pairs},
            {"resolution", Json::parse(to_json(r.resolution))},
            {"timings", timings(seconds)}};
  return j.dump(indent);
}

std::string sweep_json(const Scenario& s, const std::vector<SweepRow>& rows, double seconds, int indent) {
  Json arr = Json::array();
  for (const SweepRow& w : rows) {
    arr.push_back({{"value", w.value},
                   {"peak_amplitude", finite(w.peak_amplitude)},
                   {"peak_amplitude_ci", finite(w.peak_amplitude_ci)},
                   {"contrast_measured", finite(w.contrast_measured)},
                   {"contrast_model", finite(w.contrast_model)},
                   {"beat_hz", finite(w.beat_hz)},
                   {"noise_raw", finite(w.noise_raw)},
                   {"noise_tesla", finite(w.noise_tesla)},
                   {"sensitivity_t_per_rthz", finite(w.sensitivity_t_per_rthz)},
                   {"converged", w.converged}});
  }
  Json j = {{"command", "sweep"},
            {"scenario", Json::parse(scenario_to_json(s))},
            {"parameter", std::string(to_string(s.sweep->parameter))},
            {"rows", arr},
            {"timings", timings(seconds)}};
  return j.dump(indent);
}

std::string sweep_csv(const Scenario& s, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(s.sweep->parameter)
     << ",peak_amplitude,peak_amplitude_ci,contrast_measured,contrast_model,beat_hz,noise_raw,noise_tesla,"
        "sensitivity_t_per_rthz,converged\n";
  for (const SweepRow& w : rows) {
    os << w.value << ',' << w.peak_amplitude << ',' << w.peak_amplitude_ci << ',' << w.contrast_measured << ','
       << w.contrast_model << ',' << w.beat_hz << ',' << w.noise_raw << ',' << w.noise_tesla << ','
       << w.sensitivity_t_per_rthz << ',' << (w.converged ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace qdyne::harness
