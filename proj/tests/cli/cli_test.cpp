#include <gtest/gtest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome qdyne(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + QDYNE_CLI + "' " + args + " 2>/dev/null";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) o.out.append(buf, got);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("qdyne_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// small default-sensor scenario
fs::path small_config(const fs::path& dir, std::size_t n = 20000) {
  const fs::path cfg = dir / "small.json";
  write(cfg, R"({"name": "small", "n_sequences": )" + std::to_string(n) + "}");
  return cfg;
}

Json without_timings(const std::string& text) {
  Json j = Json::parse(text);
  j.erase("timings");
  return j;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(qdyne("").code, 1);
  EXPECT_EQ(qdyne("teleport").code, 1);
  EXPECT_EQ(qdyne("simulate --format xml").code, 1);
  EXPECT_EQ(qdyne("simulate --preset nope").code, 1);
  EXPECT_EQ(qdyne("simulate --seeds 0").code, 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(qdyne("--help").code, 0); }

TEST(Cli, BadConfigExitsOne) {
  const fs::path d = scratch("badcfg");
  write(d / "bad.json", R"({"sensor": {"bright": 1}})");
  EXPECT_EQ(qdyne("simulate --config " + (d / "bad.json").string() + " --out " + d.string()).code, 1);
  write(d / "broken.json", "{ \"name\": ");
  EXPECT_EQ(qdyne("simulate --config " + (d / "broken.json").string() + " --out " + d.string()).code, 1);
  EXPECT_EQ(qdyne("simulate --config " + (d / "absent.json").string() + " --out " + d.string()).code, 1);
}

TEST(Cli, BadThreadsEnvExitsOne) {
  const fs::path d = scratch("env");
  EXPECT_EQ(qdyne("simulate --config " + small_config(d).string() + " --out " + d.string(), "QDYNE_THREADS=abc").code,
            1);
}

TEST(Cli, SimulateThenAnalyze) {
  const fs::path d = scratch("sim");
  const Outcome sim = qdyne("simulate --config " + small_config(d).string() + " --out " + d.string());
  ASSERT_EQ(sim.code, 0);
  const Json report = Json::parse(sim.out);
  ASSERT_EQ(report["files"].size(), 1u);
  const fs::path trace = d / "small.qdtr";
  ASSERT_TRUE(fs::exists(trace));
  EXPECT_TRUE(fs::exists(d / "small_simulate.json"));

  const Outcome ana = qdyne("analyze " + trace.string() + " --window-bins 31 --out " + d.string());
  ASSERT_EQ(ana.code, 0);
  const Json j = Json::parse(ana.out);
  EXPECT_EQ(j["options"]["window_bins"], 31);
  ASSERT_EQ(j["results"].size(), 1u);
  EXPECT_TRUE(fs::exists(d / "small_spectrum.csv"));
  EXPECT_TRUE(fs::exists(d / "small_result.json"));

  const Outcome csv = qdyne("analyze " + trace.string() + " --format csv --out " + d.string());
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.rfind("trace,frequency_hz", 0), 0u);
  EXPECT_EQ(qdyne("analyze " + trace.string() + " --window-bins 3 --out " + d.string()).code, 1);
  EXPECT_EQ(qdyne("analyze " + trace.string() + " --sign 2 --out " + d.string()).code, 1);
}

TEST(Cli, TruncatedTraceExitsTwo) {
  const fs::path d = scratch("trunc");
  ASSERT_EQ(qdyne("simulate --config " + small_config(d).string() + " --out " + d.string()).code, 0);
  const fs::path trace = d / "small.qdtr";
  const std::string bytes = slurp(trace);
  write(d / "cut.qdtr", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(qdyne("analyze " + (d / "cut.qdtr").string() + " --out " + d.string()).code, 2);
  write(d / "junk.qdtr", "not a trace at all");
  EXPECT_EQ(qdyne("analyze " + (d / "junk.qdtr").string() + " --out " + d.string()).code, 2);
}

TEST(Cli, MultiSeedFileNames) {
  const fs::path d = scratch("seeds");
  const Outcome o = qdyne("simulate --config " + small_config(d, 5000).string() + " --seeds 3 --out " + d.string());
  ASSERT_EQ(o.code, 0);
  for (int s = 1; s <= 3; ++s) EXPECT_TRUE(fs::exists(d / ("small_seed" + std::to_string(s) + ".qdtr"))) << s;
  EXPECT_NE(slurp(d / "small_seed1.qdtr"), slurp(d / "small_seed2.qdtr"));
}

TEST(Cli, TraceIndependentOfThreads) {
  const fs::path a = scratch("thr1");
  const fs::path b = scratch("thr4");
  ASSERT_EQ(qdyne("simulate --config " + small_config(a).string() + " --threads 1 --out " + a.string()).code, 0);
  ASSERT_EQ(qdyne("simulate --config " + small_config(b).string() + " --threads 1 --out " + b.string(),
                  "QDYNE_THREADS=4")
                .code,
            0);
  EXPECT_EQ(slurp(a / "small.qdtr"), slurp(b / "small.qdtr"));
}

TEST(Cli, ResolveReportsReproducible) {
  const fs::path d = scratch("resolve");
  const Outcome x = qdyne("resolve --preset sign-pair --out " + d.string());
  const Outcome y = qdyne("resolve --preset sign-pair --out " + d.string(), "QDYNE_THREADS=3");
  ASSERT_EQ(x.code, 0);
  ASSERT_EQ(y.code, 0);
  EXPECT_EQ(without_timings(x.out).dump(), without_timings(y.out).dump());
  EXPECT_EQ(without_timings(slurp(d / "sign-pair_resolve.json")).dump(), without_timings(y.out).dump());
}

TEST(Cli, InconclusiveExitsThree) {
  const fs::path d = scratch("incon");
  // take the amplitude preset and swap its second τ for 2τ at rotation 5π/4
  const Outcome sim = qdyne("simulate --preset fig3b-amplitude --seeds 1 --out " + d.string());
  ASSERT_EQ(sim.code, 0);
  Json s = Json::parse(sim.out)["scenario"];
  const double tau = s["sequence"]["tau_s"];
  const double field = s["signals"][0]["amplitude_tesla"];
  s["signals"][0]["amplitude_tesla"] = field * 5.0 / 3.0;
  s["resolution"]["pairs"] = Json::array({{{"kind", "tau_change"}, {"tau_s", 2.0 * tau}}});
  write(d / "incon.json", s.dump());
  EXPECT_EQ(qdyne("resolve --config " + (d / "incon.json").string() + " --out " + d.string()).code, 3);
}

TEST(Cli, SweepCsv) {
  const fs::path d = scratch("sweep");
  write(d / "sw.json", R"({"name": "sw", "n_sequences": 20000,
    "sweep": {"parameter": "amplitude_tesla", "values": [2e-6, 4e-6, 6e-6]}})");
  const Outcome o = qdyne("sweep --config " + (d / "sw.json").string() + " --format csv --out " + d.string());
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(d / "sw_sweep.json"));
}

TEST(Cli, ScalingShortLadderExitsOne) {
  const fs::path d = scratch("ladder");
  write(d / "l.json", R"({"n_sequences": 3000, "scaling": {"times_s": [0.01, 0.02]}})");
  EXPECT_EQ(qdyne("scaling --config " + (d / "l.json").string() + " --out " + d.string()).code, 1);
}
