#include "qdyne/lorentzian.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <vector>

namespace qdyne {

namespace {

// Residuals in scaled units: x' = (x − x_ref)/x_scale, y' = y/y_scale.
struct LorentzianFunctor : Eigen::DenseFunctor<double> {
  LorentzianFunctor(std::vector<double> x, std::vector<double> y)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(x.size())), xs(std::move(x)), ys(std::move(y)) {}

  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double u = (xs[i] - p[1]) / p[2];
      f[static_cast<Eigen::Index>(i)] = p[0] / (1.0 + u * u) + p[3] - ys[i];
    }
    return 0;
  }

  int df(const InputType& p, JacobianType& j) const {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double u = (xs[i] - p[1]) / p[2];
      const double d = 1.0 + u * u;
      j(r, 0) = 1.0 / d;
      j(r, 1) = p[0] * 2.0 * u / (p[2] * d * d);
      j(r, 2) = p[0] * 2.0 * u * u / (p[2] * d * d);
      j(r, 3) = 1.0;
    }
    return 0;
  }

  std::vector<double> xs;
  std::vector<double> ys;
};

bool converged_status(Eigen::LevenbergMarquardtSpace::Status s) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (s) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
      return true;
    default:
      return false;
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double xs_spacing(std::span<const double> x) { return x.size() > 1 ? x[1] - x[0] : 1.0; }

}  // namespace

double LorentzianFit::evaluate(double x_hz) const noexcept {
  const double u = (x_hz - center_hz) / hwhm_hz;
  return amplitude / (1.0 + u * u) + offset;
}

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             const LorentzianGuess& guess, const FitOptions& opts) {
  if (x.size() != y.size()) throw InvalidArgument("x and y lengths differ");
  if (x.size() < 5) throw FitError(FitError::Kind::WindowTooSmall, "Lorentzian fit needs at least 5 points");

  const double x_ref = guess.center;
  const double x_scale = std::abs(guess.hwhm) > 0.0 ? std::abs(guess.hwhm) : 1.0;
  double y_scale = std::max(std::abs(guess.amplitude), std::abs(guess.offset));
  if (!(y_scale > 0.0)) y_scale = 1.0;

  std::vector<double> xs(x.size()), ys(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xs[i] = (x[i] - x_ref) / x_scale;
    ys[i] = y[i] / y_scale;
  }
  const std::size_t m = xs.size();
  LorentzianFunctor functor(std::move(xs), std::move(ys));

  Eigen::VectorXd p(4);
  p << guess.amplitude / y_scale, 0.0, std::abs(guess.hwhm) / x_scale, guess.offset / y_scale;

  Eigen::LevenbergMarquardt<LorentzianFunctor> lm(functor);
  lm.setXtol(opts.xtol);
  lm.setMaxfev(std::max(opts.max_iterations, 1) * 10);
  auto status = lm.minimizeInit(p);
  int it = 0;
  bool collapsed = false;
  if (status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    status = Eigen::LevenbergMarquardtSpace::Running;
    const double min_width = opts.min_hwhm / x_scale;
    while (status == Eigen::LevenbergMarquardtSpace::Running && it < opts.max_iterations) {
      status = lm.minimizeOneStep(p);
      ++it;
      if (std::abs(p[2]) < min_width) {
        collapsed = true;
        status = Eigen::LevenbergMarquardtSpace::XtolTooSmall;
        break;
      }
    }
    // still creeping towards γ = 0 at the cap: a spike narrower than the sampling
    const double spacing = std::abs(xs_spacing(x)) / x_scale;
    if (status == Eigen::LevenbergMarquardtSpace::Running && opts.min_hwhm > 0.0 && std::abs(p[2]) < 0.1 * spacing) {
      collapsed = true;
      status = Eigen::LevenbergMarquardtSpace::XtolTooSmall;
    }
  }

  Eigen::VectorXd f(static_cast<Eigen::Index>(m));
  functor(p, f);
  double rss = f.squaredNorm();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), 4);
  functor.df(p, jac);

  LorentzianFit fit;
  fit.amplitude = p[0] * y_scale;
  fit.center_hz = x_ref + p[1] * x_scale;
  fit.hwhm_hz = std::abs(p[2]) * x_scale;
  fit.offset = p[3] * y_scale;
  fit.residual_noise = std::sqrt(rss / static_cast<double>(m - 1)) * y_scale;
  fit.iterations = it;

  const double dof = static_cast<double>(m) - 4.0;
  const Eigen::Matrix4d jtj = jac.transpose() * jac;
  const Eigen::Matrix4d cov = (rss / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
  auto half_width = [&](int i, double scale) {
    return 1.96 * std::sqrt(std::max(cov(i, i), 0.0)) * scale;
  };
  fit.ci95.amplitude = half_width(0, y_scale);
  fit.ci95.center_hz = half_width(1, x_scale);
  fit.ci95.hwhm_hz = half_width(2, x_scale);
  fit.ci95.offset = half_width(3, y_scale);
  fit.width_resolved = !collapsed;
  if (collapsed) {
    // Spike narrower than a sample: x0 only resolves to the sample it sits on, and
    // L0, L_off become a linear model (spike height over the mean of the rest).
    std::size_t at = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (std::abs(x[i] - fit.center_hz) < std::abs(x[at] - fit.center_hz)) at = i;
    double rest = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (i != at) rest += y[i];
    rest /= static_cast<double>(m - 1);
    fit.center_hz = x[at];
    fit.amplitude = y[at] - rest;
    fit.offset = rest;
    p[0] = fit.amplitude / y_scale;
    p[1] = (x[at] - x_ref) / x_scale;
    p[3] = rest / y_scale;
    double rss2 = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (i != at) rss2 += (y[i] - rest) * (y[i] - rest);
    rss = rss2 / (y_scale * y_scale);
    fit.residual_noise = std::sqrt(rss / static_cast<double>(m - 1)) * y_scale;
    functor.df(p, jac);
    Eigen::MatrixXd j2(static_cast<Eigen::Index>(m), 2);
    j2.col(0) = jac.col(0);
    j2.col(1) = jac.col(3);
    const Eigen::Matrix2d c2 = (rss / (static_cast<double>(m) - 2.0)) *
                               (j2.transpose() * j2).completeOrthogonalDecomposition().pseudoInverse();
    fit.ci95.amplitude = 1.96 * std::sqrt(std::max(c2(0, 0), 0.0)) * y_scale;
    fit.ci95.offset = 1.96 * std::sqrt(std::max(c2(1, 1), 0.0)) * y_scale;
    // x0 is then only pinned by the neighbouring samples: σ ≈ spacing · σ_y / L0.
    const double spacing = std::abs(x[1] - x[0]);
    const double sigma_y = std::sqrt(rss / (static_cast<double>(m) - 2.0));
    fit.ci95.center_hz = p[0] != 0.0 ? 1.96 * spacing * sigma_y / std::abs(p[0]) : spacing;
  }

  const bool finite = p.allFinite() && std::isfinite(rss) && p[2] != 0.0;
  fit.converged = finite && converged_status(status);
  if (!fit.converged) {
    throw FitError(FitError::Kind::NotConverged,
                   "Lorentzian fit did not converge (status " + std::to_string(static_cast<int>(status)) +
                       ", " + std::to_string(it) + " iterations)",
                   fit);
  }
  return fit;
}

LorentzianFit fit_peak_at(const Spectrum& spec, std::size_t center_bin, std::size_t window_bins,
                          std::size_t lo, std::size_t hi, const FitOptions& opts) {
  lo = std::max<std::size_t>(lo, 1);  // never the DC bin
  hi = std::min(hi, spec.size());
  if (center_bin < lo || center_bin >= hi) throw InvalidArgument("peak bin outside the search range");
  const std::size_t half = window_bins / 2;
  const std::size_t begin = center_bin >= lo + half ? center_bin - half : lo;
  const std::size_t end = std::min(hi, center_bin + (window_bins - half));
  if (end <= begin || end - begin < 5) {
    throw FitError(FitError::Kind::WindowTooSmall,
                   "fit window has " + std::to_string(end > begin ? end - begin : 0) + " bins, need 5");
  }

  std::vector<double> x, y;
  x.reserve(end - begin);
  y.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    x.push_back(static_cast<double>(k));
    y.push_back(spec.magnitude(k));
  }
  const double base = median(y);
  const LorentzianGuess guess{spec.magnitude(center_bin) - base, static_cast<double>(center_bin), 2.0, base};

  auto to_hz = [&](LorentzianFit f) {
    const double w = spec.bin_width_hz;
    f.center_hz *= w;
    f.hwhm_hz *= w;
    f.ci95.center_hz *= w;
    f.ci95.hwhm_hz *= w;
    f.window_begin = begin;
    f.window_end = end;
    return f;
  };
  FitOptions bin_opts = opts;
  if (bin_opts.min_hwhm == 0.0) bin_opts.min_hwhm = 1e-3;
  try {
    return to_hz(fit_lorentzian(x, y, guess, bin_opts));
  } catch (const FitError& e) {
    if (e.kind() == FitError::Kind::NotConverged)
      throw FitError(e.kind(), e.what(), to_hz(e.diagnostics()));
    throw;
  }
}

LorentzianFit fit_peak(const Spectrum& spec, std::size_t window_bins, const FitOptions& opts) {
  return fit_peak_at(spec, spec.peak_bin(), window_bins, 1, spec.size(), opts);
}

}  // namespace qdyne
