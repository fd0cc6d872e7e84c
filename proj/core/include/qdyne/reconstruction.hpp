#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdyne/error.hpp"
#include "qdyne/local_oscillator.hpp"
#include "qdyne/lorentzian.hpp"
#include "qdyne/physics.hpp"
#include "qdyne/spectrum.hpp"
#include "qdyne/trace_sim.hpp"

namespace qdyne {

/// Measured contrast lies outside the monotone branch selected by the calibration.
class OutOfDynamicRange : public Error {
 public:
  using Error::Error;
};

/// The straddling bins needed for phase interpolation include DC or Nyquist.
class PeakOnBoundary : public Error {
 public:
  using Error::Error;
};

struct FrequencyEstimate {
  double beat_hz = 0.0;   // δ̂ = x0
  double ci_hz = 0.0;
  double above_hz = 0.0;  // ν_LO + δ̂
  double below_hz = 0.0;  // ν_LO − δ̂
};

FrequencyEstimate estimate_frequency(const LorentzianFit& fit, const LocalOscillator& lo);

/// Peak amplitude model: L0 = gain · n · contrast.
struct AmplitudeCalibration {
  double gain = 0.0;
  /// Ω0 τ of the calibration signal; selects the monotone contrast branch to invert on.
  double reference_rotation = 0.0;
};

/// Everything besides Ω0 that the contrast depends on.
struct AmplitudeModel {
  double gamma_rad_per_s_per_t = kGammaNv;
  double detuning_rad_per_s = 0.0;
  double tau_s = 0.0;
  double damping = 1.0;  // exp(−τ/T2*) when dephasing is modelled
};

AmplitudeModel amplitude_model(const PhotonTrace& trace, double detuning_rad_per_s);

/// Gain from a trace with a single known tone. Throws InvalidArgument otherwise.
AmplitudeCalibration calibrate_amplitude(const PhotonTrace& reference,
                                         std::size_t window_bins = kDefaultWindowBins);
/// Same from the spectrum of a (possibly noiseless) series; `reference` supplies header and truth.
AmplitudeCalibration calibrate_amplitude(const Spectrum& spec, const PhotonTrace& reference,
                                         std::size_t window_bins = kDefaultWindowBins);

/// Gain of an ideal bin-centred tone, (bright − dark)/4, without any measurement.
AmplitudeCalibration model_calibration(const Sensor& sensor, double reference_rotation = 0.0);

struct AmplitudeEstimate {
  double tesla = 0.0;
  double ci_tesla = 0.0;
  double rabi_rad_per_s = 0.0;
  double contrast = 0.0;
  double contrast_ci = 0.0;
};

/// Inverts the contrast model on the calibration's branch. Throws OutOfDynamicRange.
AmplitudeEstimate estimate_amplitude(const LorentzianFit& fit, std::size_t n_samples,
                                     const AmplitudeCalibration& cal, const AmplitudeModel& model);

/// Contrast → Ω0 on the branch containing `reference_rotation`.
double invert_contrast(double contrast_value, double contrast_ci, const AmplitudeModel& model,
                       double reference_rotation);

struct NoiseFloor {
  double raw_rms = 0.0;
  double tesla = 0.0;  // field whose peak would equal raw_rms
};

NoiseFloor noise_floor(const Spectrum& spec, const LorentzianFit& fit, const AmplitudeCalibration& cal,
                       const AmplitudeModel& model);

struct PhaseModel {
  InteractionParams params;
  int sign = 1;                 // resolved sign of the beat
  bool counts_inverted = true;  // bright > dark: counts fall as the |1> population rises
  bool apply_offset = true;     // subtract the detuning-induced offset
};

struct PhaseEstimate {
  double phase_rad = 0.0;  // in [−π, π)
  double ci_rad = 0.0;
  double raw_rad = 0.0;     // interpolated bin argument
  double offset_rad = 0.0;  // offset subtracted (θ, or θ + π on the far side of a π rotation)
};

PhaseEstimate estimate_phase(const Spectrum& spec, const LorentzianFit& fit, const PhaseModel& model);

struct PeakSearch {
  double threshold_sigma = 8.0;
  std::size_t window_bins = kDefaultWindowBins;
  /// Candidates weaker than this fraction of the strongest are ignored.
  double min_relative = 0.02;
};

/// Local maxima above median + threshold·(1.4826·MAD), each fitted on its own window.
/// Sorted by frequency. A peak whose fit fails is reported with converged = false
/// and its raw bin values.
std::vector<LorentzianFit> find_peaks(const Spectrum& spec, const PeakSearch& opts = {});

struct ReconstructionResult {
  double frequency_hz = 0.0;
  double frequency_ci_hz = 0.0;
  double beat_hz = 0.0;
  double amplitude_tesla = 0.0;
  double amplitude_ci_tesla = 0.0;
  double phase_rad = 0.0;
  double phase_ci_rad = 0.0;
  double theta_correction_rad = 0.0;
  bool sign_resolved = false;
  int sign = 1;
  double noise_raw = 0.0;
  double noise_tesla = 0.0;
  LorentzianFit fit;
  std::vector<std::string> warnings;  // e.g. amplitude outside the calibrated branch (values are NaN)
};

struct AnalysisOptions {
  std::size_t window_bins = kDefaultWindowBins;
  std::optional<int> sign;  // known sign of the beat; +1 assumed otherwise
  std::optional<AmplitudeCalibration> calibration;  // model_calibration otherwise
  bool correct_theta = true;
  /// Centre the fit window on this beat instead of the global peak (known-signal analysis).
  std::optional<double> fit_center_hz;
};

/// FFT, fit, and frequency/amplitude/phase estimation for one trace.
ReconstructionResult reconstruct(const PhotonTrace& trace, const AnalysisOptions& opts = {});
/// With a precomputed spectrum; only the header fields of `trace` are read, so a
/// noiseless series can be analysed through a header-only trace.
ReconstructionResult reconstruct(const PhotonTrace& trace, const Spectrum& spec,
                                 const AnalysisOptions& opts = {});

std::string to_json(const ReconstructionResult& r, int indent = 2);
std::string to_json(const LorentzianFit& f, int indent = 2);

/// Columns bin_hz, re, im, magnitude with a header row.
void write_spectrum_csv(std::ostream& os, const Spectrum& spec);

}  // namespace qdyne
