#include "qdyne/harness/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace qdyne::harness {

using Json = nlohmann::ordered_json;

namespace {

// Field readers. Each object is checked against its allowed keys before any value is read.
class Reader {
 public:
  Reader(const Json& j, std::string path, std::initializer_list<std::string_view> keys) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where(), "expected an object");
    std::set<std::string_view> allowed(keys);
    for (const auto& [k, v] : j.items()) {
      if (!allowed.contains(k)) throw ConfigError(path_ + "/" + k, "unknown field");
    }
  }

  [[nodiscard]] bool has(std::string_view k) const { return j_.contains(std::string(k)); }
  [[nodiscard]] const Json& at(std::string_view k) const { return j_.at(std::string(k)); }
  [[nodiscard]] std::string child(std::string_view k) const { return path_ + "/" + std::string(k); }

  void number(std::string_view k, double& out) const {
    if (!has(k)) return;
    out = as_number(at(k), child(k));
  }
  void boolean(std::string_view k, bool& out) const {
    if (!has(k)) return;
    if (!at(k).is_boolean()) throw ConfigError(child(k), "expected true or false");
    out = at(k).get<bool>();
  }
  void string(std::string_view k, std::string& out) const {
    if (!has(k)) return;
    if (!at(k).is_string()) throw ConfigError(child(k), "expected a string");
    out = at(k).get<std::string>();
  }
  template <typename Int>
  void integer(std::string_view k, Int& out) const {
    if (!has(k)) return;
    out = static_cast<Int>(as_integer(at(k), child(k)));
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "expected a number");
    return v.get<double>();
  }
  static long long as_integer(const Json& v, const std::string& where) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    throw ConfigError(where, "expected an integer");
  }

  [[nodiscard]] std::string where() const { return path_.empty() ? "/" : path_; }

 private:
  const Json& j_;
  std::string path_;
};

SignalField read_signal(const Json& j, const std::string& path) {
  Reader r(j, path, {"amplitude_tesla", "frequency_hz", "phase_rad"});
  SignalField s;
  r.number("amplitude_tesla", s.amplitude_tesla);
  r.number("frequency_hz", s.frequency_hz);
  r.number("phase_rad", s.phase_rad);
  return s;
}

Json write_signal(const SignalField& s) {
  return {{"amplitude_tesla", s.amplitude_tesla}, {"frequency_hz", s.frequency_hz}, {"phase_rad", s.phase_rad}};
}

void read_sensor(const Json& j, const std::string& path, Sensor& s) {
  Reader r(j, path, {"resonance_hz", "gamma_rad_per_s_per_t", "t2_star_s", "bright_rate", "dark_rate"});
  r.number("resonance_hz", s.resonance_hz);
  r.number("gamma_rad_per_s_per_t", s.gamma_rad_per_s_per_t);
  r.number("t2_star_s", s.t2_star_s);
  r.number("bright_rate", s.bright_rate);
  r.number("dark_rate", s.dark_rate);
}

void read_sequence(const Json& j, const std::string& path, SequenceConfig& c) {
  Reader r(j, path, {"tau_s", "sequence_length_s", "mode", "dc_shift_hz", "readout_window_s", "dephasing"});
  r.number("tau_s", c.tau_s);
  r.number("sequence_length_s", c.sequence_length_s);
  if (r.has("mode")) {
    std::string m;
    r.string("mode", m);
    try {
      c.mode = parse_signal_mode(m);
    } catch (const Error& e) {
      throw ConfigError(r.child("mode"), e.what());
    }
  }
  r.number("dc_shift_hz", c.dc_shift_hz);
  r.number("readout_window_s", c.readout_window_s);
  r.boolean("dephasing", c.dephasing);
}

void read_calibration(const Json& j, const std::string& path, CalibrationConfig& c) {
  Reader r(j, path, {"kind", "signal", "n_sequences"});
  if (r.has("kind")) {
    std::string k;
    r.string("kind", k);
    if (k == "model") c.kind = CalibrationConfig::Kind::Model;
    else if (k == "reference") c.kind = CalibrationConfig::Kind::Reference;
    else throw ConfigError(r.child("kind"), "expected \"model\" or \"reference\"");
  }
  if (r.has("signal")) c.signal = read_signal(r.at("signal"), r.child("signal"));
  if (r.has("n_sequences")) {
    std::size_t n = 0;
    r.integer("n_sequences", n);
    c.n_sequences = n;
  }
}

void read_analysis(const Json& j, const std::string& path, AnalysisConfig& a) {
  Reader r(j, path, {"window_bins", "sign", "correct_theta", "calibration", "fit_at_signal"});
  r.integer("window_bins", a.window_bins);
  if (r.has("sign")) {
    int s = 0;
    r.integer("sign", s);
    if (s != 1 && s != -1) throw ConfigError(r.child("sign"), "expected +1 or -1");
    a.sign = s;
  }
  r.boolean("correct_theta", a.correct_theta);
  if (r.has("calibration")) read_calibration(r.at("calibration"), r.child("calibration"), a.calibration);
  r.boolean("fit_at_signal", a.fit_at_signal);
}

std::vector<double> read_values(const Json& j, const std::string& path) {
  // Either an explicit list or {"start", "stop", "count"} (inclusive, linear).
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(Reader::as_number(j[i], path + "/" + std::to_string(i)));
    return out;
  }
  Reader r(j, path, {"start", "stop", "count"});
  if (!r.has("start") || !r.has("stop") || !r.has("count"))
    throw ConfigError(path, "range needs start, stop and count");
  double a = 0.0, b = 0.0;
  long long n = 0;
  r.number("start", a);
  r.number("stop", b);
  r.integer("count", n);
  if (n < 1) throw ConfigError(r.child("count"), "must be >= 1");
  for (long long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

ScalingConfig read_scaling(const Json& j, const std::string& path) {
  Reader r(j, path, {"times_s", "noiseless"});
  ScalingConfig s;
  if (r.has("times_s")) s.times_s = read_values(r.at("times_s"), r.child("times_s"));
  r.boolean("noiseless", s.noiseless);
  return s;
}

PairSpec::Kind parse_pair_kind(const std::string& k, const std::string& where) {
  if (k == "lo_shift") return PairSpec::Kind::LoShift;
  if (k == "sequence_stretch") return PairSpec::Kind::SequenceStretch;
  if (k == "tau_change") return PairSpec::Kind::TauChange;
  throw ConfigError(where, "expected lo_shift, sequence_stretch or tau_change");
}

std::string_view pair_value_key(PairSpec::Kind k) {
  switch (k) {
    case PairSpec::Kind::LoShift: return "delta_nu_hz";
    case PairSpec::Kind::SequenceStretch: return "delta_t_s";
    case PairSpec::Kind::TauChange: return "tau_s";
  }
  return "";
}

ResolutionConfig read_resolution(const Json& j, const std::string& path) {
  Reader r(j, path, {"pairs", "n_range", "rabi_max", "margin_factor", "noiseless"});
  ResolutionConfig c;
  if (r.has("pairs")) {
    const Json& arr = r.at("pairs");
    if (!arr.is_array()) throw ConfigError(r.child("pairs"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.child("pairs") + "/" + std::to_string(i);
      Reader pr(arr[i], p, {"kind", "delta_nu_hz", "delta_t_s", "tau_s"});
      std::string kind;
      pr.string("kind", kind);
      PairSpec spec;
      spec.kind = parse_pair_kind(kind, pr.child("kind"));
      const std::string_view key = pair_value_key(spec.kind);
      if (!pr.has(key)) throw ConfigError(p, "missing " + std::string(key));
      for (std::string_view other : {"delta_nu_hz", "delta_t_s", "tau_s"}) {
        if (other != key && pr.has(other)) throw ConfigError(pr.child(other), "not valid for " + kind);
      }
      pr.number(key, spec.value);
      c.pairs.push_back(spec);
    }
  }
  if (r.has("n_range")) {
    const Json& arr = r.at("n_range");
    if (!arr.is_array() || arr.empty()) throw ConfigError(r.child("n_range"), "expected a non-empty array");
    c.n_range.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.n_range.push_back(static_cast<int>(Reader::as_integer(arr[i], r.child("n_range") + "/" + std::to_string(i))));
  }
  if (r.has("rabi_max")) {
    double v = 0.0;
    r.number("rabi_max", v);
    c.rabi_max = v;
  }
  r.number("margin_factor", c.margin_factor);
  r.boolean("noiseless", c.noiseless);
  return c;
}

SweepConfig::Parameter parse_parameter(const std::string& p, const std::string& where) {
  if (p == "tau_s") return SweepConfig::Parameter::Tau;
  if (p == "detuning_hz") return SweepConfig::Parameter::Detuning;
  if (p == "amplitude_tesla") return SweepConfig::Parameter::Amplitude;
  if (p == "frequency_hz") return SweepConfig::Parameter::Frequency;
  throw ConfigError(where, "expected tau_s, detuning_hz, amplitude_tesla or frequency_hz");
}

SweepConfig read_sweep(const Json& j, const std::string& path) {
  Reader r(j, path, {"parameter", "values", "noiseless"});
  SweepConfig s;
  if (!r.has("parameter")) throw ConfigError(path, "missing parameter");
  std::string p;
  r.string("parameter", p);
  s.parameter = parse_parameter(p, r.child("parameter"));
  if (!r.has("values")) throw ConfigError(path, "missing values");
  s.values = read_values(r.at("values"), r.child("values"));
  if (s.values.empty()) throw ConfigError(r.child("values"), "empty sweep range");
  r.boolean("noiseless", s.noiseless);
  return s;
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string_view to_string(SweepConfig::Parameter p) {
  switch (p) {
    case SweepConfig::Parameter::Tau: return "tau_s";
    case SweepConfig::Parameter::Detuning: return "detuning_hz";
    case SweepConfig::Parameter::Amplitude: return "amplitude_tesla";
    case SweepConfig::Parameter::Frequency: return "frequency_hz";
  }
  return "";
}

std::string_view to_string(PairSpec::Kind k) {
  switch (k) {
    case PairSpec::Kind::LoShift: return "lo_shift";
    case PairSpec::Kind::SequenceStretch: return "sequence_stretch";
    case PairSpec::Kind::TauChange: return "tau_change";
  }
  return "";
}

LocalOscillator Scenario::local_oscillator() const {
  LocalOscillator lo = make_lo(sensor.resonance_hz, sequence.sequence_length_s);
  if (this->lo.n_lo) lo.n_lo = *this->lo.n_lo;
  lo.offset_hz = this->lo.offset_hz;
  return lo;
}

void Scenario::validate() const {
  auto wrap = [](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(where, e.what());
    }
  };
  if (signals.empty()) throw ConfigError("/signals", "at least one signal is required");
  for (std::size_t i = 0; i < signals.size(); ++i) wrap("/signals/" + std::to_string(i), [&] { signals[i].validate(); });
  wrap("/sensor", [&] { sensor.validate(); });
  wrap("/sequence", [&] { sequence.validate(); });
  if (n_sequences < 2) throw ConfigError("/n_sequences", "must be >= 2");
  if (seeds.empty()) throw ConfigError("/seeds", "at least one seed is required");
  if (analysis.window_bins < 5) throw ConfigError("/analysis/window_bins", "must be >= 5");
  if (analysis.calibration.n_sequences && *analysis.calibration.n_sequences < 2)
    throw ConfigError("/analysis/calibration/n_sequences", "must be >= 2");
  if (scaling) {
    for (std::size_t i = 0; i < scaling->times_s.size(); ++i) {
      if (!(scaling->times_s[i] > 0.0)) throw ConfigError("/scaling/times_s/" + std::to_string(i), "must be > 0");
    }
  }
  if (resolution) {
    for (std::size_t i = 0; i < resolution->pairs.size(); ++i) {
      const PairSpec& p = resolution->pairs[i];
      if (p.kind == PairSpec::Kind::TauChange && !(p.value > 0.0 && p.value < sequence.sequence_length_s))
        throw ConfigError("/resolution/pairs/" + std::to_string(i) + "/tau_s", "must lie in (0, T_L)");
      if (p.kind != PairSpec::Kind::TauChange && p.value == 0.0)
        throw ConfigError("/resolution/pairs/" + std::to_string(i), "modification must be nonzero");
    }
    if (!(resolution->margin_factor > 0.0)) throw ConfigError("/resolution/margin_factor", "must be > 0");
  }
}

Scenario parse_scenario(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(line_column(text, e.byte > 0 ? e.byte - 1 : 0), "malformed JSON");
  }
  Reader r(j, "", {"name", "signals", "sensor", "sequence", "lo", "n_sequences", "total_time_s", "seeds", "analysis",
                   "scaling", "resolution", "sweep", "output_prefix"});
  Scenario s;
  r.string("name", s.name);
  if (r.has("signals")) {
    const Json& arr = r.at("signals");
    if (!arr.is_array()) throw ConfigError("/signals", "expected an array");
    s.signals.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) s.signals.push_back(read_signal(arr[i], "/signals/" + std::to_string(i)));
  }
  if (r.has("sensor")) read_sensor(r.at("sensor"), "/sensor", s.sensor);
  if (r.has("sequence")) read_sequence(r.at("sequence"), "/sequence", s.sequence);
  if (r.has("lo")) {
    Reader lr(r.at("lo"), "/lo", {"n_lo", "offset_hz"});
    if (lr.has("n_lo")) {
      std::int64_t n = 0;
      lr.integer("n_lo", n);
      s.lo.n_lo = n;
    }
    lr.number("offset_hz", s.lo.offset_hz);
  }
  r.integer("n_sequences", s.n_sequences);
  if (r.has("total_time_s")) {
    double t = 0.0;
    r.number("total_time_s", t);
    if (!(t > 0.0)) throw ConfigError("/total_time_s", "must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(t / s.sequence.sequence_length_s));
    if (r.has("n_sequences") && n != s.n_sequences)
      throw ConfigError("/total_time_s", "inconsistent with n_sequences × sequence_length_s");
    s.n_sequences = n;
  }
  if (r.has("seeds")) {
    const Json& arr = r.at("seeds");
    if (!arr.is_array()) throw ConfigError("/seeds", "expected an array");
    s.seeds.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const long long v = Reader::as_integer(arr[i], "/seeds/" + std::to_string(i));
      if (v < 0) throw ConfigError("/seeds/" + std::to_string(i), "must be >= 0");
      s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (r.has("analysis")) read_analysis(r.at("analysis"), "/analysis", s.analysis);
  if (r.has("scaling")) s.scaling = read_scaling(r.at("scaling"), "/scaling");
  if (r.has("resolution")) s.resolution = read_resolution(r.at("resolution"), "/resolution");
  if (r.has("sweep")) s.sweep = read_sweep(r.at("sweep"), "/sweep");
  r.string("output_prefix", s.output_prefix);
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + e.where(), std::string(e.what()).substr(e.where().empty() ? 0 : e.where().size() + 2));
  }
}

std::string scenario_to_json(const Scenario& s, int indent) {
  Json signals = Json::array();
  for (const SignalField& f : s.signals) signals.push_back(write_signal(f));
  Json lo = Json::object();
  if (s.lo.n_lo) lo["n_lo"] = *s.lo.n_lo;
  lo["offset_hz"] = s.lo.offset_hz;

  Json cal = {{"kind", s.analysis.calibration.kind == CalibrationConfig::Kind::Model ? "model" : "reference"}};
  if (s.analysis.calibration.signal) cal["signal"] = write_signal(*s.analysis.calibration.signal);
  if (s.analysis.calibration.n_sequences) cal["n_sequences"] = *s.analysis.calibration.n_sequences;
  Json analysis = {{"window_bins", s.analysis.window_bins}};
  if (s.analysis.sign) analysis["sign"] = *s.analysis.sign;
  analysis["correct_theta"] = s.analysis.correct_theta;
  analysis["calibration"] = cal;
  analysis["fit_at_signal"] = s.analysis.fit_at_signal;

  Json j = {{"name", s.name},
            {"signals", signals},
            {"sensor",
             {{"resonance_hz", s.sensor.resonance_hz},
              {"gamma_rad_per_s_per_t", s.sensor.gamma_rad_per_s_per_t},
              {"t2_star_s", s.sensor.t2_star_s},
              {"bright_rate", s.sensor.bright_rate},
              {"dark_rate", s.sensor.dark_rate}}},
            {"sequence",
             {{"tau_s", s.sequence.tau_s},
              {"sequence_length_s", s.sequence.sequence_length_s},
              {"mode", std::string(to_string(s.sequence.mode))},
              {"dc_shift_hz", s.sequence.dc_shift_hz},
              {"readout_window_s", s.sequence.readout_window_s},
              {"dephasing", s.sequence.dephasing}}},
            {"lo", lo},
            {"n_sequences", s.n_sequences},
            {"seeds", s.seeds},
            {"analysis", analysis}};
  if (s.scaling) j["scaling"] = {{"times_s", s.scaling->times_s}, {"noiseless", s.scaling->noiseless}};
  if (s.resolution) {
    Json pairs = Json::array();
    for (const PairSpec& p : s.resolution->pairs)
      pairs.push_back({{"kind", std::string(to_string(p.kind))}, {std::string(pair_value_key(p.kind)), p.value}});
    Json res = {{"pairs", pairs}, {"n_range", s.resolution->n_range}};
    if (s.resolution->rabi_max) res["rabi_max"] = *s.resolution->rabi_max;
    res["margin_factor"] = s.resolution->margin_factor;
    res["noiseless"] = s.resolution->noiseless;
    j["resolution"] = res;
  }
  if (s.sweep) {
    j["sweep"] = {{"parameter", std::string(to_string(s.sweep->parameter))},
                  {"values", s.sweep->values},
                  {"noiseless", s.sweep->noiseless}};
  }
  if (!s.output_prefix.empty()) j["output_prefix"] = s.output_prefix;
  return j.dump(indent);
}

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = first + i;
  return v;
}

// Signal at the sensor resonance, beat δ above the timing-defined LO.
Scenario on_resonance(std::string name, double field, double beat_hz) {
  Scenario s;
  s.name = std::move(name);
  const LocalOscillator lo = make_lo(1.51082e9, s.sequence.sequence_length_s);
  const double nu = lo.frequency_hz() + beat_hz;
  s.sensor.resonance_hz = nu;
  s.lo.n_lo = lo.n_lo;
  s.signals = {SignalField{field, nu, 0.7}};
  return s;
}

std::vector<double> ladder() { return {0.01, 0.03, 0.09, 0.27, 0.81, 2.43, 7.29}; }

}  // namespace

std::vector<std::string> preset_names() {
  return {"default",        "fig1c",        "fig1d-toggled",   "fig1d-continuous", "fig1d-dc-shift",
          "fig2-ladder",    "fig3a-noise",  "fig3b-amplitude", "fig3c-frequency",  "sign-pair",
          "alias-pair",     "contrast-tau", "contrast-detuning", "three-tone"};
}

Scenario preset(std::string_view name) {
  if (name == "default") return Scenario{};
  if (name == "fig1c") {
    Scenario s;
    s.name = "fig1c";
    s.signals = {SignalField{6.5e-6, 1.51082e9, 0.3}};
    s.n_sequences = 3000000;
    s.analysis.sign = 1;
    s.analysis.calibration.kind = CalibrationConfig::Kind::Reference;
    return s;
  }
  if (name.starts_with("fig1d-")) {
    Scenario s;
    s.name = std::string(name);
    s.signals = {SignalField{6.5e-6, 1.51082e9, 0.3}};
    s.n_sequences = 300000;
    s.analysis.sign = 1;
    if (name == "fig1d-continuous") s.sequence.mode = SignalMode::Continuous;
    else if (name == "fig1d-dc-shift") {
      s.sequence.mode = SignalMode::ContinuousWithDcShift;
      s.sequence.dc_shift_hz = -3e6;
    } else if (name != "fig1d-toggled") {
      throw ConfigError("", "unknown preset " + std::string(name));
    }
    return s;
  }
  if (name == "fig2-ladder") {
    // Half-bin beat at every rung of the ×3 ladder; rates raised so the 10 ms rung is detectable.
    Scenario s = on_resonance("fig2-ladder", 2e-6, 20050.0);
    s.sensor.bright_rate = 4.0;
    s.sensor.dark_rate = 2.0;
    s.n_sequences = 3000;
    s.seeds = seed_range(100, 20);
    s.analysis.sign = 1;
    s.analysis.calibration.kind = CalibrationConfig::Kind::Reference;
    s.scaling = ScalingConfig{ladder(), false};
    return s;
  }
  if (name == "fig3a-noise") {
    // Weak signal: the residual stays noise-dominated at every rung.
    Scenario s = on_resonance("fig3a-noise", 223e-9, 20050.0);
    s.n_sequences = 3000;
    s.seeds = seed_range(100, 20);
    s.analysis.sign = 1;
    s.analysis.fit_at_signal = true;
    s.scaling = ScalingConfig{ladder(), false};
    return s;
  }
  if (name == "fig3b-amplitude") {
    // Rotation 3π/4 at τ_ref; π/4 and 5π/4 give the same contrast there.
    Scenario s = on_resonance("fig3b-amplitude", 0.0, 20000.0);
    s.sequence.tau_s = 31.3e-9;
    const double rabi = 0.75 * kPi / s.sequence.tau_s;
    s.signals[0].amplitude_tesla = field_from_rabi(rabi, kGammaNv);
    s.n_sequences = 30000;
    s.resolution = ResolutionConfig{{PairSpec{PairSpec::Kind::TauChange, 1.3 * 31.3e-9}}, {0}, 1.5 * kPi / 31.3e-9, 3.0,
                                    true};
    return s;
  }
  if (name == "fig3c-frequency") {
    Scenario s = on_resonance("fig3c-frequency", 6.5e-6, 20000.0);
    s.n_sequences = 300000;
    s.seeds = seed_range(1, 3);
    s.analysis.sign = 1;
    s.analysis.fit_at_signal = true;
    std::vector<double> f;
    for (int k = -15; k <= 15; ++k) f.push_back(s.signals[0].frequency_hz + 1e5 * k);
    s.sweep = SweepConfig{SweepConfig::Parameter::Frequency, f, false};
    return s;
  }
  if (name == "sign-pair") {
    Scenario s = on_resonance("sign-pair", 2e-6, 20000.0);
    s.n_sequences = 30000;
    s.resolution = ResolutionConfig{{PairSpec{PairSpec::Kind::LoShift, 5000.0}}, {0}, std::nullopt, 3.0, true};
    return s;
  }
  if (name == "alias-pair") {
    // T_L = 2 µs, true band index N = 1.
    Scenario s;
    s.name = "alias-pair";
    s.sequence.sequence_length_s = 2e-6;
    s.sequence.tau_s = 1e-6;
    const LocalOscillator base = make_lo(1.51082e9, 2e-6);
    const double nu = base.frequency_hz() + 30000.0 + 1.0 / 2e-6;
    s.sensor.resonance_hz = nu;
    s.lo.n_lo = base.n_lo;
    s.signals = {SignalField{2e-6, nu, 0.4}};
    s.n_sequences = 50000;
    s.resolution = ResolutionConfig{{PairSpec{PairSpec::Kind::LoShift, 5000.0},
                                     PairSpec{PairSpec::Kind::SequenceStretch, 20e-9}},
                                    {-1, 0, 1},
                                    std::nullopt,
                                    3.0,
                                    true};
    return s;
  }
  if (name == "contrast-tau") {
    Scenario s = on_resonance("contrast-tau", 40e-6, 20000.0);
    s.n_sequences = 30000;
    const double t_rabi = kTwoPi / rabi_from_field(40e-6, kGammaNv);
    std::vector<double> taus;
    for (int k = 1; k <= 80; ++k) taus.push_back(2.0 * t_rabi * k / 80.0);
    s.sweep = SweepConfig{SweepConfig::Parameter::Tau, taus, true};
    return s;
  }
  if (name == "contrast-detuning") {
    Scenario s = on_resonance("contrast-detuning", 40e-6, 20000.0);
    s.n_sequences = 30000;
    const double rabi = rabi_from_field(40e-6, kGammaNv);
    s.sequence.tau_s = kPi / (2.0 * rabi);
    std::vector<double> d;
    for (int k = -60; k <= 60; ++k) d.push_back(3.0 * rabi / kTwoPi * k / 60.0);
    s.sweep = SweepConfig{SweepConfig::Parameter::Detuning, d, true};
    return s;
  }
  if (name == "three-tone") {
    Scenario s = on_resonance("three-tone", 0.8e-6, 2000.0);
    const double base = s.signals[0].frequency_hz;
    s.signals = {SignalField{0.8e-6, base - 1000.0, 0.0}, SignalField{0.8e-6, base, 0.0},
                 SignalField{0.8e-6, base + 160.0, 0.0}};
    s.sensor.resonance_hz = base + 160.0;
    s.n_sequences = 3750;  // 12.5 ms
    return s;
  }
  throw ConfigError("", "unknown preset " + std::string(name));
}

}  // namespace qdyne::harness
