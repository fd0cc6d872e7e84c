#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "qdyne/error.hpp"
#include "qdyne/spectrum.hpp"

namespace qdyne {

/// L(x) = L0 / (1 + ((x − x0)/γ)²) + L_off
struct LorentzianFit {
  double amplitude = 0.0;  // L0
  double center_hz = 0.0;  // x0
  double hwhm_hz = 0.0;    // γ, always reported positive
  double offset = 0.0;     // L_off

  struct Ci95 {
    double amplitude = 0.0;
    double center_hz = 0.0;
    double hwhm_hz = 0.0;
    double offset = 0.0;
  } ci95;

  double residual_noise = 0.0;  // sqrt(Σ (y − L)² / (N − 1)) over the window
  std::size_t window_begin = 0;  // first bin index used
  std::size_t window_end = 0;    // one past the last bin
  int iterations = 0;
  bool converged = false;
  /// False when γ fell below FitOptions::min_hwhm; L0 and L_off CIs then treat x0 and γ as fixed.
  bool width_resolved = true;

  [[nodiscard]] double evaluate(double x_hz) const noexcept;
  [[nodiscard]] double fwhm_hz() const noexcept { return 2.0 * hwhm_hz; }
};

class FitError : public Error {
 public:
  enum class Kind { NotConverged, WindowTooSmall };
  FitError(Kind kind, const std::string& what, LorentzianFit diagnostics = {})
      : Error(what), kind_(kind), diagnostics_(diagnostics) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  /// Last iterate of the solver, meaningful for NotConverged.
  [[nodiscard]] const LorentzianFit& diagnostics() const noexcept { return diagnostics_; }

 private:
  Kind kind_;
  LorentzianFit diagnostics_;
};

struct LorentzianGuess {
  double amplitude;
  double center;
  double hwhm;
  double offset;
};

struct FitOptions {
  double xtol = 1e-10;
  int max_iterations = 200;
  /// Stop once |γ| drops below this (x units): the line is narrower than the sampling
  /// and the width is no longer identifiable. 0 disables the check.
  double min_hwhm = 0.0;
};

/// Damped least squares (Levenberg-Marquardt) on arbitrary (x, y) samples.
/// x units are preserved in the result; window indices are left at zero.
LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             const LorentzianGuess& guess, const FitOptions& opts = {});

inline constexpr std::size_t kDefaultWindowBins = 50;

/// Fit |X_k| over `window_bins` bins centred on the global (non-DC) peak.
/// Unless set, opts.min_hwhm defaults to 1e-3 bin.
LorentzianFit fit_peak(const Spectrum& spec, std::size_t window_bins = kDefaultWindowBins,
                       const FitOptions& opts = {});

/// As fit_peak, with the window centred on `center_bin` and clipped to [lo, hi).
LorentzianFit fit_peak_at(const Spectrum& spec, std::size_t center_bin, std::size_t window_bins,
                          std::size_t lo, std::size_t hi, const FitOptions& opts = {});

}  // namespace qdyne
