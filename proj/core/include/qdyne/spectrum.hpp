#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qdyne/trace_sim.hpp"

namespace qdyne {

/// One-sided DFT of a mean-subtracted, unwindowed record.
///
/// Bins are unnormalised, X_k = Σ_n x_n e^{−2πikn/N}, so a cosine of
/// amplitude A centred on bin k has |X_k| = N·A/2.
struct Spectrum {
  std::vector<std::complex<double>> bins;  // ⌊N/2⌋ + 1 entries
  double bin_width_hz = 0.0;               // 1/(N T_L)
  double sample_rate_hz = 0.0;             // 1/T_L
  std::size_t n_samples = 0;

  [[nodiscard]] std::size_t size() const noexcept { return bins.size(); }
  [[nodiscard]] double frequency_hz(std::size_t k) const noexcept {
    return static_cast<double>(k) * bin_width_hz;
  }
  [[nodiscard]] double magnitude(std::size_t k) const { return std::abs(bins[k]); }
  [[nodiscard]] std::vector<double> magnitudes() const;
  /// Index of the largest magnitude, ignoring the DC bin.
  [[nodiscard]] std::size_t peak_bin() const;
};

/// Rectangular-window real FFT of `samples` taken every `sequence_length_s`.
Spectrum fft_series(std::span<const double> samples, double sequence_length_s);

/// FFT of the photon counts; throws InvalidArgument for fewer than two sequences.
Spectrum fft_trace(const PhotonTrace& trace);

/// (1/N) Σ |X_k|² over the full two-sided spectrum, reconstructed from the one-sided bins.
/// Equals Σ (x_n − mean)², i.e. N × (population variance of the input).
double parseval_energy(const Spectrum& spec);

}  // namespace qdyne
