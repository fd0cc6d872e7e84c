#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <qdyne/error.hpp>
#include <qdyne/local_oscillator.hpp>
#include <qdyne/lorentzian.hpp>
#include <qdyne/physics.hpp>
#include <qdyne/trace_sim.hpp>

namespace qdyne::harness {

/// Schema violation or malformed JSON. `where` is a JSON pointer or "line L, column C".
class ConfigError : public Error {
 public:
  ConfigError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  [[nodiscard]] const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct LoConfig {
  std::optional<std::int64_t> n_lo;  // round(ν_sens T_L) when absent
  double offset_hz = 0.0;
};

struct CalibrationConfig {
  enum class Kind { Model, Reference };
  Kind kind = Kind::Model;
  /// Known reference tone; the scenario's first signal when absent.
  std::optional<SignalField> signal;
  /// Length of the noiseless reference record; the analysed record length when absent.
  std::optional<std::size_t> n_sequences;
};

struct AnalysisConfig {
  std::size_t window_bins = kDefaultWindowBins;
  std::optional<int> sign;
  bool correct_theta = true;
  CalibrationConfig calibration;
  /// Fit at the beat of the first configured signal rather than at the global peak.
  bool fit_at_signal = false;
};

struct ScalingConfig {
  std::vector<double> times_s;
  bool noiseless = false;
};

struct PairSpec {
  enum class Kind { LoShift, SequenceStretch, TauChange };
  Kind kind = Kind::LoShift;
  double value = 0.0;  // δν (Hz), δT_L (s) or τ' (s)
};

struct ResolutionConfig {
  std::vector<PairSpec> pairs;
  std::vector<int> n_range{0};
  std::optional<double> rabi_max;
  double margin_factor = 3.0;
  bool noiseless = true;
};

struct SweepConfig {
  enum class Parameter { Tau, Detuning, Amplitude, Frequency };
  Parameter parameter = Parameter::Tau;
  std::vector<double> values;
  bool noiseless = true;
};

struct Scenario {
  std::string name = "default";
  std::vector<SignalField> signals{SignalField{6.5e-6, 1.51082e9, 0.0}};
  Sensor sensor{.resonance_hz = 1.51082e9};
  SequenceConfig sequence;
  LoConfig lo;
  std::size_t n_sequences = 300000;
  std::vector<std::uint64_t> seeds{1};
  AnalysisConfig analysis;
  std::optional<ScalingConfig> scaling;
  std::optional<ResolutionConfig> resolution;
  std::optional<SweepConfig> sweep;
  std::string output_prefix;  // name when empty

  [[nodiscard]] double total_time_s() const noexcept {
    return static_cast<double>(n_sequences) * sequence.sequence_length_s;
  }
  [[nodiscard]] LocalOscillator local_oscillator() const;
  [[nodiscard]] std::string prefix() const { return output_prefix.empty() ? name : output_prefix; }
  /// Throws ConfigError for values the core would reject.
  void validate() const;
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);
/// Canonical JSON; parse_scenario(scenario_to_json(s)) reproduces s.
std::string scenario_to_json(const Scenario& s, int indent = 2);

/// Built-in desk-scale scenarios.
std::vector<std::string> preset_names();
Scenario preset(std::string_view name);

std::string_view to_string(SweepConfig::Parameter p);
std::string_view to_string(PairSpec::Kind k);

}  // namespace qdyne::harness
