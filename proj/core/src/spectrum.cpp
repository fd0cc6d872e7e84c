#include "qdyne/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <numeric>

#include "qdyne/error.hpp"

namespace qdyne {

namespace {

// FFTW's planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<double> Spectrum::magnitudes() const {
  std::vector<double> out(bins.size());
  std::transform(bins.begin(), bins.end(), out.begin(), [](auto c) { return std::abs(c); });
  return out;
}

std::size_t Spectrum::peak_bin() const {
  if (bins.size() < 2) throw InvalidArgument("spectrum has no non-DC bins");
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    const double m = std::norm(bins[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  return best;
}

Spectrum fft_series(std::span<const double> samples, double sequence_length_s) {
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidArgument("FFT needs at least two samples");
  if (!(sequence_length_s > 0.0)) throw InvalidArgument("sequence length must be > 0");

  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  const std::size_t n_out = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out)));
  if (!in || !out) throw std::bad_alloc();

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in.get()[i] = samples[i] - mean;
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum spec;
  spec.n_samples = n;
  spec.sample_rate_hz = 1.0 / sequence_length_s;
  spec.bin_width_hz = 1.0 / (static_cast<double>(n) * sequence_length_s);
  spec.bins.resize(n_out);
  for (std::size_t k = 0; k < n_out; ++k) spec.bins[k] = {out.get()[k][0], out.get()[k][1]};
  return spec;
}

Spectrum fft_trace(const PhotonTrace& trace) {
  if (trace.counts.size() < 2) throw InvalidArgument("cannot transform an empty trace");
  std::vector<double> x(trace.counts.begin(), trace.counts.end());
  return fft_series(x, trace.config.sequence_length_s);
}

double parseval_energy(const Spectrum& spec) {
  const std::size_t n = spec.n_samples;
  double sum = std::norm(spec.bins.front());
  const std::size_t last = spec.bins.size() - 1;
  for (std::size_t k = 1; k <= last; ++k) {
    const bool unpaired = (n % 2 == 0) && k == last;
    sum += (unpaired ? 1.0 : 2.0) * std::norm(spec.bins[k]);
  }
  return sum / static_cast<double>(n);
}

}  // namespace qdyne
