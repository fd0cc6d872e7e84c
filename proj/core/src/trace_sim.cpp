#include "qdyne/trace_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "qdyne/error.hpp"
#include "qdyne/parallel.hpp"

namespace qdyne {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// splitmix64 stream keyed by (seed, index).
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t index)
      : state_(mix64(seed + kGolden) ^ mix64(index * 0xd1b54a32d192ed03ULL + kGolden)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    state_ += kGolden;
    return mix64(state_);
  }
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// φ_k = φ0 + k Δφ, reduced with the cycle count kept small.
double running_phase(double phase0, double cycles_per_sequence, std::size_t k) {
  double c = cycles_per_sequence * static_cast<double>(k);
  c -= std::round(c);
  return phase0 + kTwoPi * c;
}

struct ToneModel {
  PhaseCoefficients coeff;
  double damping = 1.0;
  double cycles = 0.0;  // folded beat per sequence
  double phase0 = 0.0;
};

ToneModel tone_model(const SignalField& signal, const Sensor& sensor, const SequenceConfig& cfg,
                     const LocalOscillator& lo) {
  signal.validate();
  sensor.validate();
  cfg.validate();
  const InteractionParams p = InteractionParams::from_field(signal, sensor, cfg.tau_s);
  ToneModel m;
  m.coeff = phase_coefficients(p);
  m.damping = cfg.dephasing ? dephasing_factor(cfg.tau_s, sensor.t2_star_s) : 1.0;
  m.cycles = phase_increment(lo, signal.frequency_hz) / kTwoPi;
  m.phase0 = signal.phase_rad;
  return m;
}

std::vector<double> toggled_series(const ToneModel& m, std::size_t n, unsigned threads) {
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double phi = running_phase(m.phase0, m.cycles, k);
      const double osc = m.coeff.a * std::cos(phi) + m.coeff.b * std::sin(phi);
      out[k] = std::clamp(0.5 * (1.0 + m.damping * osc), 0.0, 1.0);
    }
  });
  return out;
}

}  // namespace

std::string_view to_string(SignalMode mode) {
  switch (mode) {
    case SignalMode::Toggled:
      return "toggled";
    case SignalMode::Continuous:
      return "continuous";
    case SignalMode::ContinuousWithDcShift:
      return "continuous_dc_shift";
  }
  return "toggled";
}

SignalMode parse_signal_mode(std::string_view name) {
  if (name == "toggled") return SignalMode::Toggled;
  if (name == "continuous") return SignalMode::Continuous;
  if (name == "continuous_dc_shift") return SignalMode::ContinuousWithDcShift;
  throw InvalidArgument("unknown signal mode '" + std::string(name) + "'");
}

void SequenceConfig::validate() const {
  if (!(sequence_length_s > 0.0)) throw InvalidArgument("sequence length must be > 0");
  if (!(tau_s >= 0.0)) throw InvalidArgument("interaction time must be >= 0");
  const double tol = 1e-12 * sequence_length_s;
  if (tau_s > sequence_length_s + tol)
    throw InvalidArgument("interaction time exceeds the sequence length");
  if (!(readout_window_s >= 0.0) || readout_window_s > overhead_s() + tol)
    throw InvalidArgument("readout window must fit inside the overhead");
  if (!std::isfinite(dc_shift_hz)) throw InvalidArgument("dc shift must be finite");
}

std::vector<double> population_series(const SignalField& signal, const Sensor& sensor,
                                      const SequenceConfig& cfg, const LocalOscillator& lo,
                                      std::size_t n, unsigned threads) {
  if (cfg.mode != SignalMode::Toggled)
    throw InvalidMode("population_series models the toggled signal only; use mode_adjusted_series");
  return toggled_series(tone_model(signal, sensor, cfg, lo), n, threads);
}

std::vector<double> mode_adjusted_series(const SignalField& signal, const Sensor& sensor,
                                         const SequenceConfig& cfg, const LocalOscillator& lo,
                                         std::size_t n, unsigned threads) {
  const ToneModel m = tone_model(signal, sensor, cfg, lo);
  if (cfg.mode == SignalMode::Toggled) return toggled_series(m, n, threads);

  const InteractionParams sense = InteractionParams::from_field(signal, sensor, cfg.tau_s);
  const double shift = cfg.mode == SignalMode::ContinuousWithDcShift ? kTwoPi * cfg.dc_shift_hz : 0.0;
  const InteractionParams pre =
      InteractionParams::make(sense.rabi(), sense.detuning() + shift, cfg.overhead_s());
  const double lag = kTwoPi * m.cycles * cfg.overhead_s() / cfg.sequence_length_s;
  const Mat2 prep = pi_half_pulse();

  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double phi = running_phase(m.phase0, m.cycles, k);
      QubitState s = apply_unitary(signal_unitary(pre, phi - lag), QubitState::ground());
      s = apply_unitary(signal_unitary(sense, phi), apply_unitary(prep, s));
      out[k] = std::clamp(0.5 + m.damping * (s.population1() - 0.5), 0.0, 1.0);
    }
  });
  return out;
}

MultiToneSeries multi_tone_series(std::span<const SignalField> signals, const Sensor& sensor,
                                  const SequenceConfig& cfg, const LocalOscillator& lo,
                                  std::size_t n, unsigned threads) {
  if (signals.empty()) throw InvalidArgument("multi_tone_series needs at least one tone");
  MultiToneSeries out;
  out.population.assign(n, 0.5);
  for (const SignalField& tone : signals) {
    const std::vector<double> s = mode_adjusted_series(tone, sensor, cfg, lo, n, threads);
    for (std::size_t k = 0; k < n; ++k) out.population[k] += s[k] - 0.5;
  }
  for (double& p : out.population) {
    if (p < 0.0 || p > 1.0) {
      out.clamped = true;
      p = std::clamp(p, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> expected_counts(std::span<const double> population, const Sensor& sensor) {
  std::vector<double> out(population.size());
  std::transform(population.begin(), population.end(), out.begin(), [&](double p1) {
    return (1.0 - p1) * sensor.bright_rate + p1 * sensor.dark_rate;
  });
  return out;
}

std::uint32_t poisson_draw(double mean, std::uint64_t seed, std::uint64_t index) {
  if (!(mean > 0.0)) return 0;
  CounterRng rng(seed, index);
  if (mean > 30.0) {
    std::poisson_distribution<std::uint32_t> dist(mean);
    return dist(rng);
  }
  // inversion by sequential search
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint32_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

PhotonTrace sample_photons(std::span<const double> population, const Sensor& sensor,
                           std::uint64_t seed, unsigned threads) {
  sensor.validate();
  PhotonTrace trace;
  trace.sensor = sensor;
  trace.seed = seed;
  trace.rng_name = std::string(kRngName);
  trace.counts.resize(population.size());
  for (double p1 : population)
    if (!(p1 >= 0.0 && p1 <= 1.0)) throw InvalidArgument("population outside [0, 1]");
  std::atomic<bool> clamped{false};
  parallel_for(population.size(), threads, [&](std::size_t begin, std::size_t end) {
    bool local = false;
    for (std::size_t k = begin; k < end; ++k) {
      const double p1 = population[k];
      const double mean = (1.0 - p1) * sensor.bright_rate + p1 * sensor.dark_rate;
      const std::uint32_t c = poisson_draw(mean, seed, k);
      if (c > 255) local = true;
      trace.counts[k] = static_cast<std::uint8_t>(std::min<std::uint32_t>(c, 255));
    }
    if (local) clamped = true;
  });
  trace.clamped = clamped;
  return trace;
}

PhotonTrace simulate_trace(std::span<const SignalField> signals, const Sensor& sensor,
                           const SequenceConfig& cfg, const LocalOscillator& lo, std::size_t n,
                           std::uint64_t seed, unsigned threads) {
  const MultiToneSeries series = multi_tone_series(signals, sensor, cfg, lo, n, threads);
  PhotonTrace trace = sample_photons(series.population, sensor, seed, threads);
  trace.config = cfg;
  trace.lo = lo;
  trace.truth.assign(signals.begin(), signals.end());
  return trace;
}

}  // namespace qdyne
