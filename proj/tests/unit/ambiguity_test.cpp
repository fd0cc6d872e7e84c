#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include <qdyne/ambiguity.hpp>

using namespace qdyne;

namespace {

constexpr double kPi = std::numbers::pi;

struct Arm {
  SequenceConfig cfg;
  LocalOscillator lo;
};

// noiseless measurement of one tone through the full pipeline
Measurement noiseless_measure(const SignalField& sig, const Sensor& sensor, const Arm& run, std::size_t n) {
  const std::vector<SignalField> tones{sig};
  const MultiToneSeries series = multi_tone_series(tones, sensor, run.cfg, run.lo, n, 1);
  const Spectrum spec = fft_series(expected_counts(series.population, sensor), run.cfg.sequence_length_s);
  PhotonTrace header;
  header.config = run.cfg;
  header.lo = run.lo;
  header.sensor = sensor;
  return measure(spec, header, model_calibration(sensor).gain);
}

Arm base_run(double t_l = 10.0 / 3e6, double tau = 1.404e-6) {
  Arm r;
  r.cfg.sequence_length_s = t_l;
  r.cfg.tau_s = tau;
  r.lo = make_lo(1.51082e9, t_l);
  return r;
}

Arm lo_shifted(Arm r, double delta_nu) {
  r.lo = r.lo.shifted(-delta_nu);
  return r;
}

Arm stretched(Arm r, double dt) {
  const double f = r.lo.frequency_hz();
  r.cfg.sequence_length_s += dt;
  r.lo.sequence_length_s = r.cfg.sequence_length_s;
  r.lo.offset_hz = f - static_cast<double>(r.lo.n_lo) / r.lo.sequence_length_s;
  return r;
}

Measurement summary(const LocalOscillator& lo, double beat, double ci = 0.1) {
  Measurement m;
  m.lo = lo;
  m.tau_s = 1e-6;
  m.beat_hz = beat;
  m.beat_ci_hz = ci;
  return m;
}

}  // namespace

TEST(ResolveSign, Examples) {
  const LocalOscillator lo = make_lo(1.51082e9, 10.0 / 3e6);
  const LocalOscillator moved = lo.shifted(-5e3);
  MeasurementPair up{summary(lo, 20e3), summary(moved, 25e3), LoShift{5e3}};
  const SignResolution a = resolve_sign(up);
  EXPECT_EQ(a.sign, 1);
  EXPECT_NEAR(a.predicted_positive_hz, 25e3, 1e-3);
  EXPECT_NEAR(a.predicted_negative_hz, 15e3, 1e-3);
  EXPECT_NEAR(a.margin_hz, 1e4, 1e-3);

  MeasurementPair down{summary(lo, 20e3), summary(moved, 15e3), LoShift{5e3}};
  EXPECT_EQ(resolve_sign(down).sign, -1);

  MeasurementPair zero{summary(lo, 20e3), summary(lo, 20e3), LoShift{0.0}};
  try {
    resolve_sign(zero);
    FAIL();
  } catch (const Inconclusive& e) {
    EXPECT_EQ(e.kind(), Inconclusive::Kind::Sign);
  }
}

TEST(ResolveSign, NoiseWithinMarginIsInconclusive) {
  const LocalOscillator lo = make_lo(1.51082e9, 10.0 / 3e6);
  MeasurementPair p{summary(lo, 20e3, 3e3), summary(lo.shifted(-5e3), 25e3, 3e3), LoShift{5e3}};
  EXPECT_THROW(resolve_sign(p), Inconclusive);
  // matching neither hypothesis
  MeasurementPair q{summary(lo, 20e3), summary(lo.shifted(-5e3), 40e3), LoShift{5e3}};
  EXPECT_THROW(resolve_sign(q), Inconclusive);
}

TEST(ResolveSign, PairValidation) {
  const LocalOscillator lo = make_lo(1.51082e9, 10.0 / 3e6);
  MeasurementPair wrong{summary(lo, 20e3), summary(lo.shifted(-4e3), 25e3), LoShift{5e3}};
  EXPECT_THROW(resolve_sign(wrong), InvalidArgument);
  MeasurementPair kind{summary(lo, 20e3), summary(lo, 25e3), TauChange{2e-6}};
  EXPECT_THROW(resolve_sign(kind), InvalidArgument);
}

TEST(ResolveSign, NoiselessPipelineBothSigns) {
  const Arm run = base_run();
  const Arm moved = lo_shifted(run, 5e3);
  for (int s : {1, -1}) {
    const double nu = run.lo.frequency_hz() + s * 20e3;
    const Sensor sensor{.resonance_hz = nu};
    const SignalField sig{2e-6, nu, 0.4};
    MeasurementPair p{noiseless_measure(sig, sensor, run, 30000), noiseless_measure(sig, sensor, moved, 30000),
                      LoShift{5e3}};
    EXPECT_EQ(resolve_sign(p).sign, s);
  }
}

TEST(AliasShift, Examples) {
  EXPECT_EQ(alias_shift(0, 2e-6, 20e-9), 0.0);
  EXPECT_NEAR(alias_shift(1, 2e-6, 20e-9), 2e-8 / (2e-6 * 2.02e-6), 1e-6);
  EXPECT_NEAR(alias_shift(1, 2e-6, 20e-9), 4950.495, 1e-3);
  EXPECT_DOUBLE_EQ(alias_shift(-1, 2e-6, 20e-9), -alias_shift(1, 2e-6, 20e-9));
  EXPECT_THROW(alias_shift(100, 2e-6, 20e-9), AliasValidityError);
  EXPECT_THROW(alias_shift(1, -2e-6, 20e-9), InvalidArgument);
  EXPECT_FALSE(alias_shift(1, 2e-6, 20e-9, 245e3).in_band);
  EXPECT_TRUE(alias_shift(1, 2e-6, 20e-9, 20e3).in_band);
}

TEST(AliasShift, MatchesBeatNoteDifference) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> tl(1e-6, 5e-6), frac(-0.02, 0.02), beat(-0.3, 0.3);
  std::uniform_int_distribution<int> nd(-5, 5);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const double t = tl(rng);
    const double dt = frac(rng) * t;
    const int n = nd(rng);
    if (n == 0) continue;
    const LocalOscillator lo = make_lo(1.51082e9, t);
    LocalOscillator lo2 = lo;
    lo2.sequence_length_s = t + dt;
    lo2.offset_hz = lo.frequency_hz() - static_cast<double>(lo.n_lo) / lo2.sequence_length_s;
    const double delta = beat(rng) / t;
    const double nu = lo.frequency_hz() + delta + n / t;
    const AliasShift sh = alias_shift(n, t, dt, beat_note(lo2, lo.frequency_hz() + delta).signed_hz);
    if (!sh.in_band) continue;
    const double direct = beat_note(lo2, nu).signed_hz - beat_note(lo2, lo.frequency_hz() + delta).signed_hz;
    // the direct difference cannot beat the spacing of doubles around ν
    const double ulp = std::nextafter(nu, 2.0 * nu) - nu;
    EXPECT_NEAR(direct, sh.shift_hz, std::max(1e-9 * std::abs(sh.shift_hz), 2.0 * ulp)) << t << " " << dt << " " << n;
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(ResolveAlias, SingleCandidate) {
  const Arm run = base_run(2e-6, 1e-6);
  const Arm st = stretched(run, 20e-9);
  MeasurementPair p{summary(run.lo, 30e3), summary(st.lo, 30e3), SequenceStretch{20e-9}};
  const std::vector<int> zero{0};
  const AliasResolution r = resolve_alias(p, zero, 1);
  EXPECT_EQ(r.n, 0);
  EXPECT_TRUE(r.sign_known);
}

TEST(ResolveAlias, NoiselessPipelineSelectsBand) {
  const Arm run = base_run(2e-6, 1e-6);
  const Arm st = stretched(run, 20e-9);
  const std::vector<int> range{-1, 0, 1};
  for (int truth : range) {
    const double nu = run.lo.frequency_hz() + 30e3 + truth / 2e-6;
    const Sensor sensor{.resonance_hz = nu};
    const SignalField sig{2e-6, nu, 0.4};
    MeasurementPair p{noiseless_measure(sig, sensor, run, 50000), noiseless_measure(sig, sensor, st, 50000),
                      SequenceStretch{20e-9}};
    const AliasResolution r = resolve_alias(p, range, 1);
    EXPECT_EQ(r.n, truth);
    EXPECT_LT(r.residual_hz, 1.0);
    EXPECT_GT(r.margin_hz, 1000.0);
  }
}

TEST(ResolveAlias, UnknownSignLeavesMirrorPair) {
  const Arm run = base_run(2e-6, 1e-6);
  const Arm st = stretched(run, 20e-9);
  const double nu = run.lo.frequency_hz() + 30e3 + 1 / 2e-6;
  MeasurementPair p{noiseless_measure({2e-6, nu, 0.4}, Sensor{.resonance_hz = nu}, run, 50000),
                    noiseless_measure({2e-6, nu, 0.4}, Sensor{.resonance_hz = nu}, st, 50000), SequenceStretch{20e-9}};
  const std::vector<int> range{-1, 0, 1};
  const AliasResolution r = resolve_alias(p, range);
  EXPECT_FALSE(r.sign_known);
  EXPECT_EQ(r.n * r.sign, 1);
  EXPECT_EQ(r.candidates.size(), 6u);
}

TEST(ResolveAlias, EngineeredDegeneracy) {
  // δT_L = T_L: N/T_L and N'/T̃_L alias together, every band predicts the same stretched beat
  const Arm run = base_run(2e-6, 1e-6);
  const LocalOscillator lo = run.lo;
  LocalOscillator lo2 = lo;
  lo2.sequence_length_s = 4e-6;
  lo2.offset_hz = lo.frequency_hz() - static_cast<double>(lo.n_lo) / 4e-6;
  MeasurementPair p{summary(lo, 30e3), summary(lo2, 30e3), SequenceStretch{2e-6}};
  const std::vector<int> range{0, 2};
  try {
    resolve_alias(p, range, 1);
    FAIL();
  } catch (const Inconclusive& e) {
    EXPECT_EQ(e.kind(), Inconclusive::Kind::IndistinguishableCandidates);
  }
}

TEST(AmplitudeCandidates, ResonantBranches) {
  const double tau = 31.3e-9;
  const double x = 0.25 * kPi;
  const auto c = amplitude_candidates(std::sin(x), tau, 0.0, 1.5 * kPi / tau);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0] * tau, 0.25 * kPi, 1e-12);
  EXPECT_NEAR(c[1] * tau, 0.75 * kPi, 1e-12);
  EXPECT_NEAR(c[2] * tau, 1.25 * kPi, 1e-12);
  // small angle: one candidate
  EXPECT_EQ(amplitude_candidates(std::sin(0.2), tau, 0.0, 0.5 * kPi / tau).size(), 1u);
  EXPECT_THROW(amplitude_candidates(0.5, 0.0, 0.0, 1.0), InvalidArgument);
}

TEST(AmplitudeCandidates, DetunedRootsHaveEqualContrast) {
  const double tau = 1e-6;
  const double det = 2e6;
  const double c0 = contrast(InteractionParams::make(3e6, det, tau));
  const auto c = amplitude_candidates(c0, tau, det, 3.0 * kPi / tau);
  ASSERT_GE(c.size(), 2u);
  EXPECT_TRUE(std::any_of(c.begin(), c.end(), [](double v) { return std::abs(v - 3e6) < 1.0; }));
  for (double r : c) EXPECT_NEAR(contrast(InteractionParams::make(r, det, tau)), c0, 1e-9);
}

TEST(AmplitudeCandidates, DoubledTauSeparatesMirrorBranch) {
  const double tau = 31.3e-9;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng) * kPi / tau;
    const double y = kPi / tau - x;
    const double rx = std::sin(2 * tau * x) / std::sin(tau * x);
    const double ry = std::sin(2 * tau * y) / std::sin(tau * y);
    EXPECT_GT(std::abs(rx - ry), 0.1) << x;
    EXPECT_NEAR(rx, -ry, 1e-9);
  }
}

TEST(ResolveAmplitude, SingletonIsIdentity) {
  Measurement a, b;
  a.tau_s = 31.3e-9;
  b.tau_s = 62.6e-9;
  const double rabi = 0.2 / a.tau_s;
  a.contrast = std::sin(rabi * a.tau_s);
  b.contrast = std::sin(rabi * b.tau_s);
  a.contrast_ci = b.contrast_ci = 1e-3;
  const std::vector<Measurement> runs{a, b};
  AmplitudeSearch s;
  s.rabi_max = 0.5 * kPi / a.tau_s;
  const AmplitudeResolution r = resolve_amplitude(runs, s);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_NEAR(r.rabi_rad_per_s, rabi, 1e-6 * rabi);
  EXPECT_TRUE(std::isinf(r.margin));
}

TEST(ResolveAmplitude, NoiselessTripleSelectsTruth) {
  const double tau = 31.3e-9;
  for (double rot : {0.25, 0.75, 1.25}) {
    const double rabi = rot * kPi / tau;
    Arm run = base_run(10.0 / 3e6, tau);
    Arm two = run;
    two.cfg.tau_s = 1.3 * tau;
    const double nu = run.lo.frequency_hz() + 20e3;
    const Sensor sensor{.resonance_hz = nu};
    const SignalField sig{field_from_rabi(rabi, sensor.gamma_rad_per_s_per_t), nu, 0.3};
    const std::vector<Measurement> runs{noiseless_measure(sig, sensor, run, 30000),
                                        noiseless_measure(sig, sensor, two, 30000)};
    AmplitudeSearch s;
    s.rabi_max = 1.5 * kPi / tau;
    const AmplitudeResolution r = resolve_amplitude(runs, s);
    EXPECT_EQ(r.candidates.size(), 3u);
    EXPECT_NEAR(r.rabi_rad_per_s, rabi, 1e-3 * rabi) << rot;
  }
}

TEST(ResolveAmplitude, DoubledTauCannotSplitOuterPair) {
  // π − x and π + x flip sign together at 2τ with equal magnitude
  const double tau = 31.3e-9;
  const double rabi = 1.25 * kPi / tau;
  Arm run = base_run(10.0 / 3e6, tau);
  Arm two = run;
  two.cfg.tau_s = 2 * tau;
  const double nu = run.lo.frequency_hz() + 20e3;
  const Sensor sensor{.resonance_hz = nu};
  const SignalField sig{field_from_rabi(rabi, sensor.gamma_rad_per_s_per_t), nu, 0.3};
  const std::vector<Measurement> runs{noiseless_measure(sig, sensor, run, 30000), noiseless_measure(sig, sensor, two, 30000)};
  AmplitudeSearch s;
  s.rabi_max = 1.5 * kPi / tau;
  EXPECT_THROW(resolve_amplitude(runs, s), Inconclusive);
}

TEST(ResolveAmplitude, Errors) {
  Measurement a;
  a.tau_s = 1e-6;
  const std::vector<Measurement> one{a};
  EXPECT_THROW(resolve_amplitude(one), InvalidArgument);
  const std::vector<Measurement> same{a, a};
  EXPECT_THROW(resolve_amplitude(same), InvalidArgument);
}

namespace {

struct Chain {
  Measurement primary;
  std::vector<MeasurementPair> pairs;
  Sensor sensor;
  SignalField truth;
};

// out-of-band (N = 1), negative beat, second-branch rotation
Chain full_chain() {
  Chain c;
  const Arm run = base_run(2e-6, 31.3e-9);
  const double nu = run.lo.frequency_hz() - 30e3 + 1 / 2e-6;
  c.sensor = Sensor{.resonance_hz = nu};
  c.truth = SignalField{field_from_rabi(0.75 * kPi / 31.3e-9, c.sensor.gamma_rad_per_s_per_t), nu, 0.4};
  const std::size_t n = 50000;
  c.primary = noiseless_measure(c.truth, c.sensor, run, n);
  Arm tau2 = run;
  tau2.cfg.tau_s = 1.3 * 31.3e-9;
  c.pairs = {MeasurementPair{c.primary, noiseless_measure(c.truth, c.sensor, lo_shifted(run, 5e3), n), LoShift{5e3}},
             MeasurementPair{c.primary, noiseless_measure(c.truth, c.sensor, stretched(run, 20e-9), n),
                             SequenceStretch{20e-9}},
             MeasurementPair{c.primary, noiseless_measure(c.truth, c.sensor, tau2, n), TauChange{1.3 * 31.3e-9}}};
  return c;
}

}  // namespace

TEST(ResolveAll, FullChainRecoversTruth) {
  const Chain c = full_chain();
  ResolveAllOptions o;
  o.n_range = {-1, 0, 1};
  o.rabi_max = 1.5 * kPi / 31.3e-9;
  const FullResolution r = resolve_all(c.primary, c.pairs, c.sensor, o);
  EXPECT_EQ(r.sign, -1);
  EXPECT_EQ(r.n, 1);
  EXPECT_NEAR(r.signal.frequency_hz, c.truth.frequency_hz, 1.0);
  EXPECT_NEAR(r.signal.amplitude_tesla, c.truth.amplitude_tesla, 1e-3 * c.truth.amplitude_tesla);
  EXPECT_NEAR(wrap_phase(r.signal.phase_rad - c.truth.phase_rad), 0.0, 0.05);
  ASSERT_EQ(r.steps.size(), 3u);
  for (const auto& st : r.steps) EXPECT_TRUE(st.performed) << st.name;
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j["steps"][1]["name"], "alias");
  EXPECT_TRUE(j["steps"][2]["result"].contains("candidates"));
}

TEST(ResolveAll, OrderIndependent) {
  const Chain c = full_chain();
  ResolveAllOptions o;
  o.n_range = {-1, 0, 1};
  o.rabi_max = 1.5 * kPi / 31.3e-9;
  std::vector<MeasurementPair> pairs = c.pairs;
  const std::string ref = to_json(resolve_all(c.primary, pairs, c.sensor, o));
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.modification.index() < b.modification.index(); });
  do {
    EXPECT_EQ(to_json(resolve_all(c.primary, pairs, c.sensor, o)), ref);
  } while (std::next_permutation(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return a.modification.index() < b.modification.index();
  }));
}

TEST(ResolveAll, InBandSmallAngleSkipsResolvers) {
  const Arm run = base_run();
  const double nu = run.lo.frequency_hz() + 20e3;
  const Sensor sensor{.resonance_hz = nu};
  const SignalField sig{0.5e-6, nu, 0.3};
  const Measurement m = noiseless_measure(sig, sensor, run, 30000);
  const std::vector<MeasurementPair> pairs{
      MeasurementPair{m, noiseless_measure(sig, sensor, lo_shifted(run, 5e3), 30000), LoShift{5e3}}};
  const FullResolution r = resolve_all(m, pairs, sensor);
  EXPECT_TRUE(r.steps[0].performed);
  EXPECT_FALSE(r.steps[1].performed);
  EXPECT_FALSE(r.steps[2].performed);
  EXPECT_NEAR(r.signal.frequency_hz, nu, 1e-2);
  EXPECT_NEAR(r.signal.amplitude_tesla, 0.5e-6, 1e-3 * 0.5e-6);
}

TEST(ResolveAll, ConflictingPairsInconclusive) {
  Chain c = full_chain();
  // a second LO-shift pair taken from the mirrored signal
  const Arm run = base_run(2e-6, 31.3e-9);
  const double mirror = run.lo.frequency_hz() + 30e3 + 1 / 2e-6;
  const Sensor ms{.resonance_hz = mirror};
  const SignalField msig{c.truth.amplitude_tesla, mirror, 0.4};
  c.pairs.push_back(MeasurementPair{c.primary, noiseless_measure(msig, ms, lo_shifted(run, 5e3), 50000), LoShift{5e3}});
  ResolveAllOptions o;
  o.n_range = {-1, 0, 1};
  o.rabi_max = 1.5 * kPi / 31.3e-9;
  EXPECT_THROW(resolve_all(c.primary, c.pairs, c.sensor, o), Inconclusive);
}
