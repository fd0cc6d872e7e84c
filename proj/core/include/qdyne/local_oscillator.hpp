#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qdyne {

/// Reference defined by the sequence timing: ν_LO = N_LO / T_L.
///
/// `offset_hz` models a reference pulse whose phase is advanced by
/// −2π·offset·T_L each sequence, which shifts the effective LO without
/// changing T_L. It is zero for the plain timing-defined oscillator.
struct LocalOscillator {
  double sequence_length_s = 1.0;
  std::int64_t n_lo = 0;
  double offset_hz = 0.0;

  [[nodiscard]] double frequency_hz() const noexcept {
    return static_cast<double>(n_lo) / sequence_length_s + offset_hz;
  }
  [[nodiscard]] double sample_rate_hz() const noexcept { return 1.0 / sequence_length_s; }
  [[nodiscard]] double nyquist_hz() const noexcept { return 0.5 / sequence_length_s; }

  /// Same oscillator shifted by `delta_hz` (ν̃_LO = ν_LO + delta).
  [[nodiscard]] LocalOscillator shifted(double delta_hz) const {
    LocalOscillator lo = *this;
    lo.offset_hz += delta_hz;
    return lo;
  }
};

/// N_LO = round(ν_sens T_L) with ties away from zero.
LocalOscillator make_lo(double sensor_resonance_hz, double sequence_length_s);

/// Floored modulo: result has the sign of the divisor.
double floored_mod(double a, double n);

/// Per-sequence phase increment of the signal against the LO, in [−π, π).
double phase_increment(const LocalOscillator& lo, double signal_hz);

struct BeatNote {
  double signed_hz = 0.0;            // in [−1/(2T_L), 1/(2T_L))
  double magnitude_hz = 0.0;         // |signed_hz|
  double phase_increment_rad = 0.0;  // 2π signed_hz T_L
};

BeatNote beat_note(const LocalOscillator& lo, double signal_hz);

struct AliasCandidate {
  double frequency_hz = 0.0;
  int n = 0;     // band index N: ν = ν_LO ± δ + N/T_L
  int sign = 1;  // sign of the in-band beat
};

/// All ν_LO ± δ + N/T_L for N in `n_range`; δ = 0 yields one candidate per N.
std::vector<AliasCandidate> alias_candidates(const LocalOscillator& lo, double measured_delta_hz,
                                             std::span<const int> n_range);

}  // namespace qdyne
