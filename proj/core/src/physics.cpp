#include "qdyne/physics.hpp"

#include <algorithm>
#include <cmath>

#include "qdyne/error.hpp"

namespace qdyne {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateAmplitude = 1e-12;

}  // namespace

double wrap_phase(double rad) {
  double r = std::fmod(rad + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  // fmod can land exactly on +π after the shift for inputs like −π − ε
  return r >= kPi ? r - kTwoPi : r;
}

void SignalField::validate() const {
  if (!(amplitude_tesla >= 0.0)) throw InvalidArgument("signal amplitude must be >= 0");
  if (!(frequency_hz > 0.0)) throw InvalidArgument("signal frequency must be > 0");
  if (!std::isfinite(phase_rad)) throw InvalidArgument("signal phase must be finite");
}

SignalField SignalField::normalized() const {
  SignalField s = *this;
  s.phase_rad = wrap_phase(phase_rad);
  return s;
}

void Sensor::validate() const {
  if (!(resonance_hz > 0.0)) throw InvalidArgument("sensor resonance must be > 0");
  if (!(gamma_rad_per_s_per_t > 0.0)) throw InvalidArgument("gyromagnetic ratio must be > 0");
  if (!(t2_star_s > 0.0)) throw InvalidArgument("T2* must be > 0");
  if (!(dark_rate >= 0.0) || !(bright_rate >= dark_rate))
    throw InvalidArgument("photon rates must satisfy 0 <= dark_rate <= bright_rate");
}

InteractionParams InteractionParams::make(double rabi, double detuning, double tau_s) {
  if (!std::isfinite(rabi) || !std::isfinite(detuning)) throw InvalidArgument("non-finite drive");
  if (!(tau_s >= 0.0)) throw InvalidArgument("interaction time must be >= 0");
  InteractionParams p;
  p.rabi_ = rabi;
  p.detuning_ = detuning;
  p.generalized_ = std::hypot(detuning, rabi);
  p.tau_ = tau_s;
  return p;
}

InteractionParams InteractionParams::from_field(const SignalField& signal, const Sensor& sensor,
                                                double tau_s) {
  return make(rabi_from_field(signal.amplitude_tesla, sensor.gamma_rad_per_s_per_t),
              kTwoPi * (signal.frequency_hz - sensor.resonance_hz), tau_s);
}

QubitState apply_unitary(const Mat2& u, const QubitState& s) {
  // column vector is (c1, c0)
  return {u(1, 0) * s.c1 + u(1, 1) * s.c0, u(0, 0) * s.c1 + u(0, 1) * s.c0};
}

Mat2 signal_unitary(const InteractionParams& p, double phase_rad) {
  const double omega = p.generalized_rabi();
  if (omega == 0.0) return Mat2::Identity();
  const double half = 0.5 * p.rotation_angle();
  const double c = std::cos(half);
  const Complex is{0.0, std::sin(half)};
  const double nz = p.detuning() / omega;
  const double nr = p.rabi() / omega;
  const Complex e = std::polar(1.0, phase_rad);
  Mat2 u;
  u(0, 0) = c - is * nz;
  u(0, 1) = is * nr * e;
  u(1, 0) = is * nr * std::conj(e);
  u(1, 1) = c + is * nz;
  return u;
}

Mat2 pi_half_pulse() {
  const double r = 1.0 / std::sqrt(2.0);
  Mat2 u;
  u << Complex{r, 0.0}, Complex{0.0, r}, Complex{0.0, r}, Complex{r, 0.0};
  return u;
}

PhaseCoefficients phase_coefficients(const InteractionParams& p) {
  const double omega = p.generalized_rabi();
  if (omega == 0.0) return {};
  const double x = p.rotation_angle();
  const double s_half = std::sin(0.5 * x);
  const double one_minus_cos = 2.0 * s_half * s_half;
  return {p.rabi() / omega * std::sin(x),
          -(p.detuning() * p.rabi()) / (omega * omega) * one_minus_cos};
}

double PhaseCoefficients::amplitude() const { return std::hypot(a, b); }

double population_exact(const InteractionParams& p, double phase_rad) {
  const PhaseCoefficients k = phase_coefficients(p);
  const double pop = 0.5 * (1.0 + k.a * std::cos(phase_rad) + k.b * std::sin(phase_rad));
  return std::clamp(pop, 0.0, 1.0);
}

double population_approx(double rabi, double tau_s, double phase_rad) {
  return 0.5 * (1.0 + std::sin(rabi * tau_s) * std::cos(phase_rad));
}

bool is_degenerate_drive(const InteractionParams& p) {
  return phase_coefficients(p).amplitude() <= kDegenerateAmplitude;
}

std::pair<double, double> extremal_phases(const InteractionParams& p) {
  if (is_degenerate_drive(p))
    throw DegenerateDrive("population is independent of the signal phase");
  const double omega = p.generalized_rabi();
  const double half = 0.5 * p.rotation_angle();
  // tan φ = −(Δ/Ω_sig) tan(Ω_sig τ/2); atan2 keeps the τ = π/Ω_sig case finite.
  double base = -std::atan2(p.detuning() / omega * std::sin(half), std::cos(half));
  if (base > 0.5 * kPi) base -= kPi;
  if (base <= -0.5 * kPi) base += kPi;
  const double other = base + kPi;
  if (population_exact(p, base) >= population_exact(p, other)) return {base, other};
  return {other, base};
}

double contrast(const InteractionParams& p) {
  if (is_degenerate_drive(p)) return 0.0;
  const auto [hi, lo] = extremal_phases(p);
  return population_exact(p, hi) - population_exact(p, lo);
}

double max_contrast(double detuning, double rabi) {
  if (!(rabi > 0.0)) throw InvalidArgument("max_contrast requires Rabi frequency > 0");
  if (std::abs(detuning) <= rabi) return 1.0;
  const double omega2 = detuning * detuning + rabi * rabi;
  return 2.0 * std::abs(detuning) * rabi / omega2;
}

double optimal_tau(double detuning, double rabi) {
  if (!(rabi > 0.0)) throw InvalidArgument("optimal_tau requires Rabi frequency > 0");
  const double omega = std::hypot(detuning, rabi);
  if (std::abs(detuning) <= rabi) {
    const double arg = std::min(1.0, omega / (std::sqrt(2.0) * rabi));
    return 2.0 / omega * std::asin(arg);
  }
  return kPi / omega;
}

double beat_phase_shift(const InteractionParams& p) {
  const double x = p.rotation_angle();
  if (p.generalized_rabi() == 0.0 || std::abs(std::sin(x)) < 1e-12)
    throw UndefinedPhaseShift("beat phase shift undefined for sin(Ω_sig τ) = 0");
  return std::atan(p.detuning() / p.generalized_rabi() * std::tan(0.5 * x));
}

double beat_phase_offset(const InteractionParams& p) {
  if (is_degenerate_drive(p))
    throw DegenerateDrive("beat phase offset undefined for a degenerate drive");
  const PhaseCoefficients k = phase_coefficients(p);
  return std::atan2(-k.b, k.a);
}

double signed_contrast(const InteractionParams& p) {
  const PhaseCoefficients k = phase_coefficients(p);
  return k.a < 0.0 ? -k.amplitude() : k.amplitude();
}

double dephasing_factor(double tau_s, double t2_star_s) { return std::exp(-tau_s / t2_star_s); }

double field_from_rabi(double rabi, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gyromagnetic ratio must be > 0");
  return rabi / gamma;
}

double rabi_from_field(double field, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gyromagnetic ratio must be > 0");
  return field * gamma;
}

double max_unambiguous_field(double gamma, double t2_star_s) {
  if (!(gamma > 0.0) || !(t2_star_s > 0.0)) throw InvalidArgument("γ and T2* must be > 0");
  return kPi / (gamma * t2_star_s);
}

}  // namespace qdyne
