// qdyne: simulate, analyze, scaling, resolve, sweep.
//
// Exit codes: 0 ok, 1 usage or config, 2 data error, 3 inconclusive resolution.

#include <CLI11.hpp>
#include <json.hpp>

#include <qdyne/ambiguity.hpp>
#include <qdyne/harness/runner.hpp>
#include <qdyne/harness/scenario.hpp>
#include <qdyne/trace_io.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace qdyne;
using namespace qdyne::harness;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInconclusive = 3 };

struct Common {
  std::string config;
  std::string preset;
  std::string out = ".";
  std::size_t seeds = 0;
  unsigned threads = 0;
  std::string format = "json";
};

unsigned effective_threads(unsigned flag) {
  if (const char* env = std::getenv("QDYNE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
      throw ConfigError("QDYNE_THREADS", "expected a positive integer");
    }
  }
  return flag;
}

Scenario scenario_from(const Common& c) {
  if (!c.config.empty() && !c.preset.empty()) throw ConfigError("", "--config and --preset are exclusive");
  Scenario s = !c.config.empty() ? load_scenario(c.config) : !c.preset.empty() ? preset(c.preset) : Scenario{};
  if (c.seeds > 0) {
    const std::uint64_t first = s.seeds.front();
    s.seeds.resize(c.seeds);
    for (std::size_t i = 0; i < c.seeds; ++i) s.seeds[i] = first + i;
  }
  return s;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw TraceFormatError(TraceFormatError::Kind::Io, "cannot write " + p.string());
  out << text;
}

fs::path out_dir(const Common& c) {
  fs::path d(c.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (!fs::is_directory(d)) throw ConfigError("--out", "not a directory: " + c.out);
  return d;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = scenario_from(c);
  const fs::path dir = out_dir(c);
  const unsigned threads = effective_threads(c.threads);
  Json files = Json::array();
  std::ostringstream csv;
  csv << "seed,path,n_sequences,bytes,clamped\n";
  for (std::uint64_t seed : s.seeds) {
    const PhotonTrace tr = simulate(s, seed, threads);
    const std::string name =
        s.seeds.size() == 1 ? s.prefix() + ".qdtr" : s.prefix() + "_seed" + std::to_string(seed) + ".qdtr";
    const fs::path p = dir / name;
    write_trace(tr, p);
    const auto bytes = fs::file_size(p);
    files.push_back({{"seed", seed}, {"path", p.string()}, {"n_sequences", tr.n_sequences()}, {"bytes", bytes},
                     {"clamped", tr.clamped}});
    csv << seed << ',' << p.string() << ',' << tr.n_sequences() << ',' << bytes << ',' << (tr.clamped ? 1 : 0) << '\n';
  }
  Json report = {{"command", "simulate"},
                 {"scenario", Json::parse(scenario_to_json(s))},
                 {"files", files},
                 {"timings", {{"wall_s", since(t0)}}}};
  write_file(dir / (s.prefix() + "_simulate.json"), report.dump(2) + "\n");
  std::cout << (c.format == "csv" ? csv.str() : report.dump(2) + "\n");
  return kOk;
}

struct AnalyzeFlags {
  std::vector<std::string> traces;
  std::optional<std::size_t> window_bins;
  std::optional<int> sign;
  bool no_theta = false;
};

int cmd_analyze(const Common& c, const AnalyzeFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  AnalysisConfig cfg;
  if (!c.config.empty()) cfg = load_scenario(c.config).analysis;
  if (f.window_bins) cfg.window_bins = *f.window_bins;
  if (f.sign) {
    if (*f.sign != 1 && *f.sign != -1) throw ConfigError("--sign", "expected +1 or -1");
    cfg.sign = *f.sign;
  }
  if (f.no_theta) cfg.correct_theta = false;
  if (cfg.window_bins < 5) throw ConfigError("--window-bins", "must be >= 5");
  const fs::path dir = out_dir(c);
  const unsigned threads = effective_threads(c.threads);

  Json results = Json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "trace,frequency_hz,frequency_ci_hz,beat_hz,amplitude_tesla,amplitude_ci_tesla,phase_rad,phase_ci_rad,"
         "noise_tesla\n";
  for (const std::string& path : f.traces) {
    const PhotonTrace tr = read_trace(fs::path(path));
    Scenario s;
    s.sensor = tr.sensor;
    s.sequence = tr.config;
    s.lo.n_lo = tr.lo.n_lo;
    s.lo.offset_hz = tr.lo.offset_hz;
    if (!tr.truth.empty()) s.signals = tr.truth;
    s.analysis = cfg;
    if (cfg.calibration.kind == CalibrationConfig::Kind::Reference && !cfg.calibration.signal && tr.truth.empty())
      throw ConfigError("/analysis/calibration", "reference calibration needs a signal when the trace has no truth");
    const AmplitudeCalibration cal = calibration_for(s, tr.n_sequences(), threads);
    const Spectrum spec = fft_trace(tr);
    const ReconstructionResult r = reconstruct(tr, spec, analysis_options(s, cal));

    const std::string stem = fs::path(path).stem().string();
    const fs::path spec_path = dir / (stem + "_spectrum.csv");
    {
      std::ofstream os(spec_path);
      if (!os) throw TraceFormatError(TraceFormatError::Kind::Io, "cannot write " + spec_path.string());
      write_spectrum_csv(os, spec);
    }
    Json one = {{"trace", path},
                {"n_sequences", tr.n_sequences()},
                {"seed", tr.seed},
                {"result", Json::parse(to_json(r))},
                {"spectrum_csv", spec_path.string()}};
    write_file(dir / (stem + "_result.json"), one.dump(2) + "\n");
    results.push_back(one);
    csv << path << ',' << r.frequency_hz << ',' << r.frequency_ci_hz << ',' << r.beat_hz << ',' << r.amplitude_tesla
        << ',' << r.amplitude_ci_tesla << ',' << r.phase_rad << ',' << r.phase_ci_rad << ',' << r.noise_tesla << '\n';
  }
  Json options = {{"window_bins", cfg.window_bins},
                  {"sign", cfg.sign ? Json(*cfg.sign) : Json(nullptr)},
                  {"correct_theta", cfg.correct_theta},
                  {"calibration", cfg.calibration.kind == CalibrationConfig::Kind::Model ? "model" : "reference"}};
  Json report = {{"command", "analyze"}, {"options", options}, {"results", results},
                 {"timings", {{"wall_s", since(t0)}}}};
  std::cout << (c.format == "csv" ? csv.str() : report.dump(2) + "\n");
  return kOk;
}

int cmd_scaling(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = scenario_from(c);
  const fs::path dir = out_dir(c);
  const ScalingResult r = run_scaling(s, effective_threads(c.threads));
  const std::string json = scaling_json(s, r, since(t0)) + "\n";
  const std::string csv = scaling_csv(r);
  write_file(dir / (s.prefix() + "_scaling.json"), json);
  write_file(dir / (s.prefix() + "_scaling.csv"), csv);
  std::cout << (c.format == "csv" ? csv : json);
  return kOk;
}

int cmd_resolve(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = scenario_from(c);
  const fs::path dir = out_dir(c);
  try {
    const ResolveResult r = run_resolve(s, effective_threads(c.threads));
    const std::string json = resolve_json(s, r, since(t0)) + "\n";
    write_file(dir / (s.prefix() + "_resolve.json"), json);
    if (c.format == "csv") {
      std::cout << "frequency_hz,amplitude_tesla,phase_rad,sign,n\n";
      std::cout.precision(17);
      std::cout << r.resolution.signal.frequency_hz << ',' << r.resolution.signal.amplitude_tesla << ','
                << r.resolution.signal.phase_rad << ',' << r.resolution.sign << ',' << r.resolution.n << '\n';
    } else {
      std::cout << json;
    }
  } catch (const Inconclusive& e) {
    Json j = {{"command", "resolve"}, {"inconclusive", e.what()}};
    write_file(dir / (s.prefix() + "_resolve.json"), j.dump(2) + "\n");
    std::cerr << "inconclusive: " << e.what() << '\n';
    return kInconclusive;
  }
  return kOk;
}

int cmd_sweep(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = scenario_from(c);
  const fs::path dir = out_dir(c);
  const std::vector<SweepRow> rows = run_sweep(s, effective_threads(c.threads));
  const std::string csv = sweep_csv(s, rows);
  const std::string json = sweep_json(s, rows, since(t0)) + "\n";
  write_file(dir / (s.prefix() + "_sweep.csv"), csv);
  write_file(dir / (s.prefix() + "_sweep.json"), json);
  std::cout << (c.format == "csv" ? csv : json);
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool scenario) {
  if (scenario) {
    sub->add_option("--config", c.config, "scenario JSON file");
    sub->add_option("--preset", c.preset, "built-in scenario name")
        ->check(CLI::IsMember(preset_names()));
  } else {
    sub->add_option("--config", c.config, "scenario JSON file; only its analysis section is used");
  }
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seeds", c.seeds, "number of seeds, counting up from the first configured seed")
      ->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "worker threads (0 = all); QDYNE_THREADS overrides");
  sub->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qdyne heterodyne sensing simulator and analyser"};
  app.require_subcommand(1);
  Common common;
  AnalyzeFlags af;

  auto* sim = app.add_subcommand("simulate", "write photon traces for a scenario");
  add_common(sim, common, true);
  auto* ana = app.add_subcommand("analyze", "reconstruct frequency, amplitude and phase from traces");
  add_common(ana, common, false);
  ana->add_option("traces", af.traces, "trace files")->required()->check(CLI::ExistingFile);
  ana->add_option("--window-bins", af.window_bins, "Lorentzian fit window in bins");
  ana->add_option("--sign", af.sign, "known sign of the beat (+1 or -1)");
  ana->add_flag("--no-theta-correction", af.no_theta, "report the phase without the detuning offset removed");
  auto* sca = app.add_subcommand("scaling", "uncertainty scaling over a time ladder");
  add_common(sca, common, true);
  auto* res = app.add_subcommand("resolve", "sign, alias and amplitude disambiguation");
  add_common(res, common, true);
  auto* swp = app.add_subcommand("sweep", "metric versus one scenario parameter");
  add_common(swp, common, true);
  app.add_subcommand("presets", "list built-in scenarios")->callback([] {
    for (const std::string& n : preset_names()) std::cout << n << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(common);
    if (ana->parsed()) return cmd_analyze(common, af);
    if (sca->parsed()) return cmd_scaling(common);
    if (res->parsed()) return cmd_resolve(common);
    if (swp->parsed()) return cmd_sweep(common);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const Inconclusive& e) {
    std::cerr << "inconclusive: " << e.what() << '\n';
    return kInconclusive;
  } catch (const TraceFormatError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
