#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qdyne/error.hpp"
#include "qdyne/local_oscillator.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/reconstruction.hpp"

namespace qdyne {

/// A resolver could not separate its hypotheses.
class Inconclusive : public Error {
 public:
  enum class Kind { Sign, IndistinguishableCandidates, Unresolved };
  Inconclusive(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// |N δT_L / T_L| >= 1: the linear alias shift no longer applies.
class AliasValidityError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Summary of one analysed run.
struct Measurement {
  LocalOscillator lo;
  double tau_s = 0.0;
  double beat_hz = 0.0;  // |δ| from the fitted peak
  double beat_ci_hz = 0.0;
  double contrast = 0.0;  // peak amplitude mapped through the calibration gain
  double contrast_ci = 0.0;
  double beat_phase_rad = 0.0;  // interpolated bin argument with the count inversion removed
  double phase_ci_rad = 0.0;
};

/// Fit and summarise a trace. `gain` is the calibration gain (peak = gain·n·contrast).
Measurement measure(const PhotonTrace& trace, double gain, std::size_t window_bins = kDefaultWindowBins);
/// Same from a precomputed spectrum; only the header fields of `header` are used.
Measurement measure(const Spectrum& spec, const PhotonTrace& header, double gain,
                    std::size_t window_bins = kDefaultWindowBins);

struct LoShift {
  double delta_nu_hz = 0.0;  // second LO = first LO − δν
};
struct SequenceStretch {
  double delta_t_s = 0.0;  // second T_L = first T_L + δT_L, same LO frequency
};
struct TauChange {
  double tau_s = 0.0;  // second interaction time
};
using Modification = std::variant<LoShift, SequenceStretch, TauChange>;

struct MeasurementPair {
  Measurement first;
  Measurement second;
  Modification modification;

  /// Throws InvalidArgument unless exactly the modified parameter differs.
  void validate() const;
};

/// Options shared by the resolvers.
struct DecisionOptions {
  double margin_factor = 3.0;  // margins are compared with this many combined CIs
  double min_noise_hz = 1e-9;  // floor for CI-derived margins
};

struct SignResolution {
  int sign = 1;
  double predicted_positive_hz = 0.0;
  double predicted_negative_hz = 0.0;
  double residual_hz = 0.0;
  double margin_hz = 0.0;  // runner-up residual − winning residual
};

SignResolution resolve_sign(const MeasurementPair& pair, const DecisionOptions& opts = {});

struct AliasShift {
  double shift_hz = 0.0;
  /// The shifted beat stays inside (−1/(2T̃_L), 1/(2T̃_L)); only checked when a base beat is given.
  bool in_band = true;
};

/// Δδ^(N) = N δT_L / (T_L T̃_L), T̃_L = T_L + δT_L. Throws AliasValidityError.
double alias_shift(int n, double t_l, double delta_t_l);
/// As above, additionally flagging whether `base_signed_beat_hz` + Δδ remains in band.
AliasShift alias_shift(int n, double t_l, double delta_t_l, double base_signed_beat_hz);

struct AliasScore {
  int n = 0;
  int sign = 1;
  double predicted_hz = 0.0;
  double residual_hz = 0.0;
  double shift_hz = 0.0;  // Δδ^(N); NaN when outside the formula's validity
  bool in_band = true;
};

struct AliasResolution {
  int n = 0;
  int sign = 1;
  bool sign_known = false;  // otherwise (−sign, −n) fits equally well
  double residual_hz = 0.0;
  double margin_hz = 0.0;
  std::vector<AliasScore> candidates;
};

/// Chooses N (band index: ν = ν_LO + sign·δ + N/T_L) from a stretched-sequence pair.
AliasResolution resolve_alias(const MeasurementPair& pair, std::span<const int> n_range,
                              std::optional<int> known_sign = std::nullopt, const DecisionOptions& opts = {});

struct AmplitudeSearch {
  double detuning_rad_per_s = 0.0;
  std::optional<double> rabi_max;  // π / min τ by default
  int sign = 1;                    // sign of the beat, flips the relative phases
  double margin_sigma = 3.0;
  double min_contrast_ci = 1e-9;
};

struct AmplitudeCandidate {
  double rabi_rad_per_s = 0.0;
  double score = 0.0;  // Σ |z_meas − z_pred|² / ci²
};

struct AmplitudeResolution {
  double rabi_rad_per_s = 0.0;
  double margin = 0.0;  // √score(runner-up) − √score(best)
  std::vector<AmplitudeCandidate> candidates;
};

/// Ω0 values on [0, rabi_max] whose contrast at τ_ref equals `contrast_ref`.
std::vector<double> amplitude_candidates(double contrast_ref, double tau_ref, double detuning_rad_per_s,
                                         double rabi_max);

/// Picks Ω0 from runs at ≥ 2 distinct τ; the first measurement is the reference.
AmplitudeResolution resolve_amplitude(std::span<const Measurement> runs, const AmplitudeSearch& search = {});

struct ResolutionStep {
  std::string name;  // "sign", "alias", "amplitude"
  bool performed = false;
  std::string detail;  // JSON of the resolver output
};

struct FullResolution {
  SignalField signal;
  int sign = 1;
  int n = 0;
  double rabi_rad_per_s = 0.0;
  std::vector<ResolutionStep> steps;
};

struct ResolveAllOptions {
  std::vector<int> n_range{0};
  std::optional<double> rabi_max;
  DecisionOptions decision;
};

/// Sign from LoShift pairs, then N from SequenceStretch pairs, then Ω0 from TauChange pairs,
/// regardless of the order in which the pairs are given. `primary` is the unmodified run.
FullResolution resolve_all(const Measurement& primary, std::span<const MeasurementPair> pairs,
                           const Sensor& sensor, const ResolveAllOptions& opts = {});

std::string to_json(const SignResolution& r, int indent = -1);
std::string to_json(const AliasResolution& r, int indent = -1);
std::string to_json(const AmplitudeResolution& r, int indent = -1);
std::string to_json(const FullResolution& r, int indent = 2);

}  // namespace qdyne
