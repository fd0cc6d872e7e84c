#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <qdyne/ambiguity.hpp>
#include <qdyne/reconstruction.hpp>
#include <qdyne/spectrum.hpp>
#include <qdyne/trace_sim.hpp>

#include "qdyne/harness/scenario.hpp"

namespace qdyne::harness {

/// Fewer than five rungs in a scaling ladder.
class InsufficientLadder : public ConfigError {
 public:
  explicit InsufficientLadder(const std::string& what) : ConfigError("/scaling/times_s", what) {}
};

/// Header-only trace (no counts) describing `s`.
PhotonTrace trace_header(const Scenario& s);

/// Photon trace for one seed.
PhotonTrace simulate(const Scenario& s, std::uint64_t seed, unsigned threads = 0);

/// Spectrum of the expected counts, i.e. the infinite-average record.
Spectrum noiseless_spectrum(const Scenario& s, std::size_t n, unsigned threads = 0);

/// Calibration per the scenario's analysis section for records of `n` sequences.
AmplitudeCalibration calibration_for(const Scenario& s, std::size_t n, unsigned threads = 0);

AnalysisOptions analysis_options(const Scenario& s, const AmplitudeCalibration& cal);

// scaling

struct RungSummary {
  double time_s = 0.0;
  std::size_t n_sequences = 0;
  std::size_t runs = 0;      // seeds with a converged fit
  std::size_t failures = 0;  // seeds whose fit threw
  // medians over seeds
  double frequency_ci_hz = 0.0;
  double fwhm_hz = 0.0;
  double amplitude_ci_tesla = 0.0;
  double phase_ci_rad = 0.0;
  double noise_tesla = 0.0;
  double noise_raw = 0.0;
  double frequency_error_hz = 0.0;  // median |f̂ − f|
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;  // finite rungs used
};

struct ScalingSlopes {
  SlopeFit frequency_ci;
  SlopeFit linewidth;
  SlopeFit amplitude_ci;
  SlopeFit phase_ci;
  SlopeFit noise_floor;
};

struct ScalingResult {
  std::vector<RungSummary> rungs;
  ScalingSlopes slopes;
};

/// Least-squares slope of log y against log x over finite positive pairs.
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Every seed is one long record; rung k analyses its first round(T_k/T_L) sequences.
ScalingResult run_scaling(const Scenario& s, unsigned threads = 0);

// resolution

struct ResolveResult {
  Measurement primary;
  std::vector<MeasurementPair> pairs;
  FullResolution resolution;
};

/// Runs the primary and every modified measurement, then resolve_all. Throws Inconclusive.
ResolveResult run_resolve(const Scenario& s, unsigned threads = 0);

/// Measurement of the scenario's configuration with one modification applied (none for nullopt).
Measurement measure_scenario(const Scenario& s, const std::optional<PairSpec>& mod, bool noiseless,
                             unsigned threads = 0);

// sweep

struct SweepRow {
  double value = 0.0;
  double peak_amplitude = 0.0;  // fitted L0, mean over seeds
  double peak_amplitude_ci = 0.0;
  double contrast_measured = 0.0;  // L0 / (gain n)
  double contrast_model = 0.0;     // damping · contrast(params)
  double beat_hz = 0.0;
  double noise_raw = 0.0;
  double noise_tesla = 0.0;
  double sensitivity_t_per_rthz = 0.0;  // noise_tesla · √T
  bool converged = false;
};

std::vector<SweepRow> run_sweep(const Scenario& s, unsigned threads = 0);

/// Scenario with the swept parameter set to `value`; LO stays that of the base scenario.
Scenario sweep_point(const Scenario& base, SweepConfig::Parameter p, double value);

// reports

std::string scaling_json(const Scenario& s, const ScalingResult& r, double seconds, int indent = 2);
std::string scaling_csv(const ScalingResult& r);
std::string resolve_json(const Scenario& s, const ResolveResult& r, double seconds, int indent = 2);
std::string sweep_json(const Scenario& s, const std::vector<SweepRow>& rows, double seconds, int indent = 2);
std::string sweep_csv(const Scenario& s, const std::vector<SweepRow>& rows);

}  // namespace qdyne::harness
