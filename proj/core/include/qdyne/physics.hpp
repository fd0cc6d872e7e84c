#pragma once

// Two-level sensor driven by a near-resonant classical field.
//
// Matrices act on column vectors in the basis order (|1>, |0>), i.e. the
// ground state |0> is (0, 1)^T. All angular quantities (Ω, Δ) are rad/s,
// all plain frequencies are Hz.

#include <Eigen/Core>
#include <complex>
#include <numbers>
#include <utility>

namespace qdyne {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// NV gyromagnetic ratio, 2π × 28.03 MHz/mT expressed in rad·s⁻¹·T⁻¹.
inline constexpr double kGammaNv = kTwoPi * 28.03e9;

/// Wraps an angle into [-π, π).
double wrap_phase(double rad);

/// Classical field B(t) = B0 cos(2π ν t + φ0).
struct SignalField {
  double amplitude_tesla = 0.0;
  double frequency_hz = 1.0;
  double phase_rad = 0.0;

  /// Throws InvalidArgument if amplitude < 0 or frequency <= 0.
  void validate() const;
  /// Copy with phase wrapped into [-π, π).
  [[nodiscard]] SignalField normalized() const;
};

struct Sensor {
  double resonance_hz = 1.0;
  double gamma_rad_per_s_per_t = kGammaNv;
  double t2_star_s = 50e-6;
  // Mean photons per accepted readout window in |0> (bright) and |1> (dark).
  double bright_rate = 0.25;
  double dark_rate = 0.15;

  void validate() const;
};

/// Rotating-frame drive parameters for one interaction of length τ.
class InteractionParams {
 public:
  InteractionParams() = default;
  /// rabi = Ω0 = γ B0, detuning = Δ = 2π(ν_sig − ν_sens); tau >= 0.
  static InteractionParams make(double rabi_rad_per_s, double detuning_rad_per_s, double tau_s);
  /// Builds Ω0 and Δ from a field and a sensor.
  static InteractionParams from_field(const SignalField& signal, const Sensor& sensor, double tau_s);

  [[nodiscard]] double rabi() const noexcept { return rabi_; }
  [[nodiscard]] double detuning() const noexcept { return detuning_; }
  [[nodiscard]] double generalized_rabi() const noexcept { return generalized_; }
  [[nodiscard]] double tau() const noexcept { return tau_; }
  /// Ω_sig τ.
  [[nodiscard]] double rotation_angle() const noexcept { return generalized_ * tau_; }

  [[nodiscard]] InteractionParams with_tau(double tau_s) const { return make(rabi_, detuning_, tau_s); }
  [[nodiscard]] InteractionParams with_detuning(double d) const { return make(rabi_, d, tau_); }

 private:
  double rabi_ = 0.0;
  double detuning_ = 0.0;
  double generalized_ = 0.0;
  double tau_ = 0.0;
};

struct QubitState {
  Complex c0{1.0, 0.0};
  Complex c1{0.0, 0.0};

  static QubitState ground() { return {}; }
  [[nodiscard]] double population1() const { return std::norm(c1); }
  [[nodiscard]] double norm() const { return std::norm(c0) + std::norm(c1); }
};

/// Applies a basis-(|1>,|0>) matrix to a state.
QubitState apply_unitary(const Mat2& u, const QubitState& s);

/// Evolution under the signal for τ with signal phase φ. Identity if Ω_sig = 0.
Mat2 signal_unitary(const InteractionParams& p, double phase_rad);

/// Reference π/2 pulse with phase zero: (1/√2)[[1, i], [i, 1]].
Mat2 pi_half_pulse();

/// Population of |1> after π/2 preparation and signal interaction (closed form).
double population_exact(const InteractionParams& p, double phase_rad);

/// Small-detuning approximation ½[1 + sin(Ω0 τ) cos φ].
double population_approx(double rabi_rad_per_s, double tau_s, double phase_rad);

/// Coefficients of the phase dependence: population = ½[1 + A cos φ + B sin φ].
struct PhaseCoefficients {
  double a = 0.0;  // (Ω0/Ω_sig) sin(Ω_sig τ)
  double b = 0.0;  // −(Δ Ω0/Ω_sig²)(1 − cos(Ω_sig τ))

  [[nodiscard]] double amplitude() const;  // √(A² + B²)
};
PhaseCoefficients phase_coefficients(const InteractionParams& p);

/// True when the population does not depend on φ at all.
bool is_degenerate_drive(const InteractionParams& p);

/// Phases of maximum and minimum population; throws DegenerateDrive.
std::pair<double, double> extremal_phases(const InteractionParams& p);

/// max_φ population − min_φ population; 0 for a degenerate drive.
double contrast(const InteractionParams& p);

/// Best contrast reachable by tuning τ: 1 if |Δ| <= Ω0 else 2|Δ|Ω0/Ω_sig².
double max_contrast(double detuning_rad_per_s, double rabi_rad_per_s);

/// Interaction time reaching max_contrast.
double optimal_tau(double detuning_rad_per_s, double rabi_rad_per_s);

/// θ = arctan[(Δ/Ω_sig) tan(Ω_sig τ/2)]; throws UndefinedPhaseShift when sin(Ω_sig τ) = 0.
double beat_phase_shift(const InteractionParams& p);

/// Offset ψ with population = ½[1 + R cos(φ + ψ)], R >= 0. Equals θ, or θ + π when A < 0.
/// Defined whenever the drive is not degenerate.
double beat_phase_offset(const InteractionParams& p);

/// sgn(A)·√(A² + B²): oscillation amplitude carrying the sign of the cosine term.
double signed_contrast(const InteractionParams& p);

/// Multiplies the oscillating part of a population by exp(−τ/T2*).
double dephasing_factor(double tau_s, double t2_star_s);

double field_from_rabi(double rabi_rad_per_s, double gamma_rad_per_s_per_t);
double rabi_from_field(double field_tesla, double gamma_rad_per_s_per_t);

/// Upper end of the unambiguous dynamic range: π/(γ T2*).
double max_unambiguous_field(double gamma_rad_per_s_per_t, double t2_star_s);

}  // namespace qdyne
