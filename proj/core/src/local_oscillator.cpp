#include "qdyne/local_oscillator.hpp"

#include <cmath>

#include "qdyne/error.hpp"
#include "qdyne/physics.hpp"

namespace qdyne {

namespace {

// Folded beat in units of the sampling rate: (½ + d T_L) mod 1 − ½.
double folded_cycles(const LocalOscillator& lo, double signal_hz) {
  const double cycles = (signal_hz - lo.frequency_hz()) * lo.sequence_length_s;
  double f = floored_mod(0.5 + cycles, 1.0) - 0.5;
  // (x mod 1) can round up to exactly 1.0 for x just below an integer
  if (f >= 0.5) f -= 1.0;
  return f;
}

}  // namespace

LocalOscillator make_lo(double sensor_resonance_hz, double sequence_length_s) {
  if (!(sensor_resonance_hz > 0.0) || !(sequence_length_s > 0.0))
    throw InvalidArgument("make_lo requires positive resonance and sequence length");
  LocalOscillator lo;
  lo.sequence_length_s = sequence_length_s;
  lo.n_lo = std::llround(sensor_resonance_hz * sequence_length_s);
  return lo;
}

double floored_mod(double a, double n) { return a - n * std::floor(a / n); }

double phase_increment(const LocalOscillator& lo, double signal_hz) {
  return kTwoPi * folded_cycles(lo, signal_hz);
}

BeatNote beat_note(const LocalOscillator& lo, double signal_hz) {
  const double f = folded_cycles(lo, signal_hz);
  BeatNote b;
  b.signed_hz = f / lo.sequence_length_s;
  b.magnitude_hz = std::abs(b.signed_hz);
  b.phase_increment_rad = kTwoPi * f;
  return b;
}

std::vector<AliasCandidate> alias_candidates(const LocalOscillator& lo, double measured_delta_hz,
                                             std::span<const int> n_range) {
  if (!(measured_delta_hz >= 0.0) || measured_delta_hz > lo.nyquist_hz() * (1.0 + 1e-12))
    throw InvalidArgument("measured beat must lie in [0, 1/(2 T_L)]");
  std::vector<AliasCandidate> out;
  out.reserve(2 * n_range.size());
  const double band = lo.sample_rate_hz();
  for (int n : n_range) {
    const double base = lo.frequency_hz() + n * band;
    out.push_back({base + measured_delta_hz, n, +1});
    if (measured_delta_hz > 0.0) out.push_back({base - measured_delta_hz, n, -1});
  }
  return out;
}

}  // namespace qdyne
