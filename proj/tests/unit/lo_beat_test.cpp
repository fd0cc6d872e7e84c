#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <qdyne/error.hpp>
#include <qdyne/local_oscillator.hpp>

#include "oracles.hpp"

using namespace qdyne;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTl = 10.0 / 3e6;

LocalOscillator lo_at(double t_l, std::int64_t n) { return LocalOscillator{t_l, n, 0.0}; }

}  // namespace

TEST(MakeLo, Fig1cSampling) {
  const LocalOscillator lo = make_lo(1.51082e9, kTl);
  EXPECT_EQ(lo.n_lo, 5036);
  EXPECT_NEAR(lo.frequency_hz(), 1.51080e9, 1e-3);
  // exact rational: ν T_L = 1.51082e9 / 3e5
  const oracle::cpp_rational exact = oracle::cpp_rational(151082) * 10000 / 300000;
  EXPECT_EQ(oracle::round_rational(exact), 5036);
  EXPECT_EQ(oracle::round_rational(oracle::exact(1.51082e9) * oracle::exact(kTl)), lo.n_lo);
}

TEST(MakeLo, IntegerProductKeepsResonance) {
  const LocalOscillator lo = make_lo(1.5e9, 2e-6);
  EXPECT_EQ(lo.n_lo, 3000);
  EXPECT_DOUBLE_EQ(lo.frequency_hz(), 1.5e9);
}

TEST(MakeLo, TwoMicrosecondSequence) {
  const LocalOscillator lo = make_lo(1.51082e9, 2e-6);
  EXPECT_EQ(lo.n_lo, 3022);
  EXPECT_NEAR(lo.frequency_hz(), 1.511e9, 1e-3);
}

TEST(MakeLo, TiesAwayFromZero) {
  EXPECT_EQ(make_lo(2.5, 1.0).n_lo, 3);
  EXPECT_EQ(make_lo(3.5, 1.0).n_lo, 4);
  EXPECT_THROW(make_lo(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(make_lo(1.0, -1.0), InvalidArgument);
}

TEST(MakeLo, RationalOracleOnRandomInputs) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> nu(1e8, 3e9), tl(1e-7, 1e-5);
  for (int i = 0; i < 2000; ++i) {
    const double v = nu(rng), t = tl(rng);
    const auto lo = make_lo(v, t);
    EXPECT_EQ(oracle::cpp_int(lo.n_lo), oracle::round_rational(oracle::exact(v) * oracle::exact(t)));
    const double prod = lo.frequency_hz() * lo.sequence_length_s;
    EXPECT_NEAR(prod, std::round(prod), 1e-9 * prod);
  }
}

TEST(FlooredMod, SignFollowsDivisor) {
  EXPECT_DOUBLE_EQ(floored_mod(-0.25, 1.0), 0.75);
  EXPECT_DOUBLE_EQ(floored_mod(1.25, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(floored_mod(0.25, -1.0), -0.75);
  EXPECT_DOUBLE_EQ(floored_mod(-3.0, 1.0), 0.0);
}

TEST(PhaseIncrement, Examples) {
  const auto lo = lo_at(kTl, 5036);
  const double f = lo.frequency_hz();
  EXPECT_NEAR(phase_increment(lo, f), 0.0, 1e-12);
  EXPECT_NEAR(phase_increment(lo, f + 0.25 / kTl), kPi / 2.0, 1e-6);
  EXPECT_NEAR(phase_increment(lo, f + 1.0 / kTl), 0.0, 1e-6);
  EXPECT_NEAR(phase_increment(lo, f - 0.25 / kTl), -kPi / 2.0, 1e-6);
}

TEST(BeatNote, InBandAndWrapped) {
  const auto lo = lo_at(kTl, 5036);
  const double f = lo.frequency_hz();
  EXPECT_NEAR(beat_note(lo, f + 20e3).signed_hz, 20e3, 1e-3);
  const BeatNote neg = beat_note(lo, f - 20e3);
  EXPECT_NEAR(neg.signed_hz, -20e3, 1e-3);
  EXPECT_NEAR(neg.magnitude_hz, 20e3, 1e-3);
  EXPECT_NEAR(beat_note(lo, f + 280e3).signed_hz, -20e3, 1e-3);
}

TEST(BeatNote, MatchesFloorDefinition) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> off(-2e6, 2e6);
  const auto lo = lo_at(kTl, 5036);
  for (int i = 0; i < 5000; ++i) {
    const double v = lo.frequency_hz() + off(rng);
    const double want = oracle::sawtooth_beat_hz(v, lo.frequency_hz(), kTl);
    const BeatNote b = beat_note(lo, v);
    // both folds agree away from the ±Nyquist seam
    if (std::abs(std::abs(want) - lo.nyquist_hz()) > 1.0) {
      EXPECT_NEAR(b.signed_hz, want, 1e-3);
    }
  }
}

TEST(BeatNote, Invariants) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(1.0e9, 2.0e9);
  std::uniform_int_distribution<int> k(-20, 20);
  const auto lo = make_lo(1.51082e9, kTl);
  for (int i = 0; i < 5000; ++i) {
    const double nu = v(rng);
    const BeatNote b = beat_note(lo, nu);
    EXPECT_LE(b.magnitude_hz, lo.nyquist_hz());
    EXPECT_GE(b.signed_hz, -lo.nyquist_hz());
    EXPECT_LT(b.signed_hz, lo.nyquist_hz());
    EXPECT_DOUBLE_EQ(b.magnitude_hz, std::abs(b.signed_hz));
    EXPECT_NEAR(b.phase_increment_rad, 2.0 * kPi * b.signed_hz * kTl, 1e-12);
    EXPECT_DOUBLE_EQ(b.phase_increment_rad, phase_increment(lo, nu));
    // periodicity
    const double shifted = nu + k(rng) * lo.sample_rate_hz();
    if (std::abs(b.magnitude_hz - lo.nyquist_hz()) > 1.0) EXPECT_NEAR(beat_note(lo, shifted).signed_hz, b.signed_hz, 1e-3);
  }
}

TEST(BeatNote, AntisymmetricAboutLo) {
  const auto lo = make_lo(1.51082e9, kTl);
  for (double x = 1.0; x < lo.nyquist_hz(); x += 997.0) {
    EXPECT_NEAR(beat_note(lo, lo.frequency_hz() + x).signed_hz, -beat_note(lo, lo.frequency_hz() - x).signed_hz, 1e-4);
  }
}

TEST(BeatNote, OffsetShiftsLo) {
  const auto lo = make_lo(1.51082e9, kTl);
  const auto moved = lo.shifted(5e3);
  EXPECT_NEAR(moved.frequency_hz() - lo.frequency_hz(), 5e3, 1e-6);
  const double nu = lo.frequency_hz() + 20e3;
  EXPECT_NEAR(beat_note(moved, nu).signed_hz, 15e3, 1e-3);
}

TEST(AliasCandidates, Examples) {
  const auto lo = lo_at(2e-6, 3022);
  const std::vector<int> zero{0};
  const auto a = alias_candidates(lo, 0.0, zero);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_DOUBLE_EQ(a[0].frequency_hz, lo.frequency_hz());

  const auto b = alias_candidates(lo, 20e3, zero);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0].frequency_hz, lo.frequency_hz() + 20e3, 1e-6);
  EXPECT_NEAR(b[1].frequency_hz, lo.frequency_hz() - 20e3, 1e-6);

  const auto t = lo_at(1.0 / 300e3, 5036);
  const std::vector<int> three{-1, 0, 1};
  const auto c = alias_candidates(t, 20e3, three);
  ASSERT_EQ(c.size(), 6u);
  for (const auto& cand : c) {
    EXPECT_NEAR(beat_note(t, cand.frequency_hz).magnitude_hz, 20e3, 20e3 * 1e-9);
    EXPECT_EQ(beat_note(t, cand.frequency_hz).signed_hz > 0 ? 1 : -1, cand.sign);
  }
  EXPECT_THROW(alias_candidates(t, 200e3, three), InvalidArgument);
  EXPECT_THROW(alias_candidates(t, -1.0, three), InvalidArgument);
}

TEST(AliasCandidates, RoundTripRandom) {
  std::mt19937_64 rng(5);
  const auto lo = make_lo(1.51082e9, kTl);
  std::uniform_real_distribution<double> d(1.0, lo.nyquist_hz() - 1.0);
  const std::vector<int> range{-3, -2, -1, 0, 1, 2, 3};
  for (int i = 0; i < 500; ++i) {
    const double delta = d(rng);
    for (const auto& cand : alias_candidates(lo, delta, range))
      EXPECT_NEAR(beat_note(lo, cand.frequency_hz).magnitude_hz, delta, delta * 1e-9);
  }
}
