#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdyne/local_oscillator.hpp"
#include "qdyne/physics.hpp"

namespace qdyne {

enum class SignalMode {
  Toggled,                // signal present only during τ
  Continuous,             // signal also drives the sensor during the overhead
  ContinuousWithDcShift,  // as Continuous, with the resonance shifted by dc_shift_hz outside τ
};

std::string_view to_string(SignalMode mode);
SignalMode parse_signal_mode(std::string_view name);

struct SequenceConfig {
  double tau_s = 1.404e-6;
  double sequence_length_s = 10.0 / 3e6;
  SignalMode mode = SignalMode::Toggled;
  double dc_shift_hz = 0.0;
  double readout_window_s = 400e-9;
  // Optional exp(−τ/T2*) damping of the population oscillation.
  bool dephasing = false;

  /// Preparation + readout time, T_L − τ.
  [[nodiscard]] double overhead_s() const noexcept { return sequence_length_s - tau_s; }
  void validate() const;
};

/// Per-sequence accepted photon counts plus everything needed to reproduce them.
struct PhotonTrace {
  std::vector<std::uint8_t> counts;
  SequenceConfig config;
  LocalOscillator lo;
  Sensor sensor;
  std::uint64_t seed = 0;
  std::string rng_name;
  bool clamped = false;  // some draw exceeded 255 and was stored as 255
  std::vector<SignalField> truth;

  [[nodiscard]] std::size_t n_sequences() const noexcept { return counts.size(); }
  [[nodiscard]] double total_time_s() const noexcept {
    return static_cast<double>(counts.size()) * config.sequence_length_s;
  }
};

inline constexpr std::string_view kRngName = "splitmix64-counter/poisson-inversion";

/// Toggled-mode population of |1> for sequences 0..n−1. Throws InvalidMode otherwise.
std::vector<double> population_series(const SignalField& signal, const Sensor& sensor,
                                      const SequenceConfig& cfg, const LocalOscillator& lo,
                                      std::size_t n, unsigned threads = 0);

/// Population series honouring cfg.mode.
///
/// The continuous modes approximate the drive during the overhead as an
/// imperfect initialisation: |0> is first rotated by the signal for
/// overhead_s (detuning shifted by dc_shift_hz in ContinuousWithDcShift).
std::vector<double> mode_adjusted_series(const SignalField& signal, const Sensor& sensor,
                                         const SequenceConfig& cfg, const LocalOscillator& lo,
                                         std::size_t n, unsigned threads = 0);

struct MultiToneSeries {
  std::vector<double> population;
  bool clamped = false;
};

/// Linear superposition: deviations from ½ of each tone add, then clamp to [0, 1].
MultiToneSeries multi_tone_series(std::span<const SignalField> signals, const Sensor& sensor,
                                  const SequenceConfig& cfg, const LocalOscillator& lo,
                                  std::size_t n, unsigned threads = 0);

/// Mean photons per sequence: (1 − p1)·bright + p1·dark.
std::vector<double> expected_counts(std::span<const double> population, const Sensor& sensor);

/// Poisson counts with a per-index counter-based stream, so any chunking gives the same trace.
/// Fills counts, sensor, seed, rng_name and clamped; config, lo and truth are left to the caller.
PhotonTrace sample_photons(std::span<const double> population, const Sensor& sensor,
                           std::uint64_t seed, unsigned threads = 0);

/// Single Poisson draw for sequence `index` of the stream `seed`.
std::uint32_t poisson_draw(double mean, std::uint64_t seed, std::uint64_t index);

/// Series (multi-tone aware) + photon sampling + header fill.
PhotonTrace simulate_trace(std::span<const SignalField> signals, const Sensor& sensor,
                           const SequenceConfig& cfg, const LocalOscillator& lo, std::size_t n,
                           std::uint64_t seed, unsigned threads = 0);

}  // namespace qdyne
