#include "qdyne/ambiguity.hpp"

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace qdyne {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b, double abs_tol, double rel_tol = 1e-12) {
  return std::abs(a - b) <= std::max(abs_tol, rel_tol * std::max(std::abs(a), std::abs(b)));
}

double combined_noise(const Measurement& a, const Measurement& b, const DecisionOptions& o) {
  return std::max(o.margin_factor * std::hypot(a.beat_ci_hz, b.beat_ci_hz), o.min_noise_hz);
}

struct Response {
  double contrast = 0.0;
  double offset = 0.0;  // beat phase offset ψ
};

Response response(double rabi, double detuning, double tau) {
  const InteractionParams p = InteractionParams::make(rabi, detuning, tau);
  if (is_degenerate_drive(p)) return {};
  return {contrast(p), beat_phase_offset(p)};
}

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json sign_json(const SignResolution& r) {
  return {{"sign", r.sign},
          {"predicted_positive_hz", r.predicted_positive_hz},
          {"predicted_negative_hz", r.predicted_negative_hz},
          {"residual_hz", r.residual_hz},
          {"margin_hz", finite_or_null(r.margin_hz)}};
}

nlohmann::ordered_json alias_json(const AliasResolution& r) {
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const AliasScore& c : r.candidates) {
    cands.push_back({{"n", c.n},
                     {"sign", c.sign},
                     {"predicted_hz", c.predicted_hz},
                     {"residual_hz", c.residual_hz},
                     {"shift_hz", finite_or_null(c.shift_hz)},
                     {"in_band", c.in_band}});
  }
  return {{"n", r.n},
          {"sign", r.sign},
          {"sign_known", r.sign_known},
          {"residual_hz", r.residual_hz},
          {"margin_hz", finite_or_null(r.margin_hz)},
          {"candidates", cands}};
}

nlohmann::ordered_json amplitude_json(const AmplitudeResolution& r) {
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const AmplitudeCandidate& c : r.candidates)
    cands.push_back({{"rabi_rad_per_s", c.rabi_rad_per_s}, {"score", c.score}});
  return {{"rabi_rad_per_s", r.rabi_rad_per_s}, {"margin", finite_or_null(r.margin)}, {"candidates", cands}};
}

}  // namespace

Measurement measure(const PhotonTrace& trace, double gain, std::size_t window_bins) {
  return measure(fft_trace(trace), trace, gain, window_bins);
}

Measurement measure(const Spectrum& spec, const PhotonTrace& header, double gain, std::size_t window_bins) {
  if (!(gain > 0.0)) throw InvalidArgument("calibration gain must be > 0");
  const LorentzianFit fit = fit_peak(spec, window_bins);
  PhaseModel pm;
  pm.counts_inverted = header.sensor.bright_rate > header.sensor.dark_rate;
  pm.apply_offset = false;
  const PhaseEstimate ph = estimate_phase(spec, fit, pm);

  Measurement m;
  m.lo = header.lo;
  m.tau_s = header.config.tau_s;
  m.beat_hz = fit.center_hz;
  m.beat_ci_hz = fit.ci95.center_hz;
  const double scale = gain * static_cast<double>(spec.n_samples);
  m.contrast = fit.amplitude / scale;
  m.contrast_ci = fit.ci95.amplitude / scale;
  m.beat_phase_rad = ph.phase_rad;
  m.phase_ci_rad = ph.ci_rad;
  return m;
}

void MeasurementPair::validate() const {
  const Measurement& a = first;
  const Measurement& b = second;
  const bool same_t = close(a.lo.sequence_length_s, b.lo.sequence_length_s, 0.0);
  const bool same_f = close(a.lo.frequency_hz(), b.lo.frequency_hz(), 1e-6);
  const bool same_tau = close(a.tau_s, b.tau_s, 0.0);
  std::visit(
      [&](const auto& mod) {
        using M = std::decay_t<decltype(mod)>;
        if constexpr (std::is_same_v<M, LoShift>) {
          if (mod.delta_nu_hz == 0.0) throw InvalidArgument("LO shift pair with δν = 0");
          if (!same_t || !same_tau || !close(b.lo.frequency_hz(), a.lo.frequency_hz() - mod.delta_nu_hz, 1e-6))
            throw InvalidArgument("LO shift pair must differ only in the LO frequency by −δν");
        } else if constexpr (std::is_same_v<M, SequenceStretch>) {
          if (mod.delta_t_s == 0.0) throw InvalidArgument("stretch pair with δT_L = 0");
          if (!same_f || !same_tau ||
              !close(b.lo.sequence_length_s, a.lo.sequence_length_s + mod.delta_t_s, 0.0, 1e-9))
            throw InvalidArgument("stretch pair must differ only in the sequence length by δT_L");
        } else {
          if (!same_t || !same_f || !close(b.tau_s, mod.tau_s, 0.0, 1e-9) || same_tau)
            throw InvalidArgument("τ pair must differ only in the interaction time");
        }
      },
      modification);
}

SignResolution resolve_sign(const MeasurementPair& pair, const DecisionOptions& opts) {
  const auto* shift = std::get_if<LoShift>(&pair.modification);
  if (shift == nullptr) throw InvalidArgument("resolve_sign needs an LO shift pair");
  if (shift->delta_nu_hz == 0.0)
    throw Inconclusive(Inconclusive::Kind::Sign, "δν = 0 leaves both signs with the same beat");
  pair.validate();

  const double nu_lo = pair.first.lo.frequency_hz();
  const double delta = pair.first.beat_hz;
  SignResolution r;
  r.predicted_positive_hz = beat_note(pair.second.lo, nu_lo + delta).magnitude_hz;
  r.predicted_negative_hz = beat_note(pair.second.lo, nu_lo - delta).magnitude_hz;
  const double rp = std::abs(pair.second.beat_hz - r.predicted_positive_hz);
  const double rn = std::abs(pair.second.beat_hz - r.predicted_negative_hz);
  const double noise = combined_noise(pair.first, pair.second, opts);
  if (std::abs(r.predicted_positive_hz - r.predicted_negative_hz) <= noise)
    throw Inconclusive(Inconclusive::Kind::Sign, "both sign hypotheses predict the same shifted beat");

  r.sign = rp <= rn ? 1 : -1;
  r.residual_hz = std::min(rp, rn);
  r.margin_hz = std::max(rp, rn) - r.residual_hz;
  if (r.residual_hz >= 0.5 * std::abs(shift->delta_nu_hz))
    throw Inconclusive(Inconclusive::Kind::Sign, "shifted beat matches neither sign hypothesis: " +
                                                     to_json(r));
  if (r.margin_hz <= noise)
    throw Inconclusive(Inconclusive::Kind::Sign, "sign margin within noise: " + to_json(r));
  return r;
}

double alias_shift(int n, double t_l, double delta_t_l) {
  if (!(t_l > 0.0) || !(t_l + delta_t_l > 0.0)) throw InvalidArgument("sequence lengths must be > 0");
  const double ratio = static_cast<double>(n) * delta_t_l / t_l;
  if (!(std::abs(ratio) < 1.0)) throw AliasValidityError("|N δT_L / T_L| must be < 1");
  return ratio / (t_l + delta_t_l);
}

AliasShift alias_shift(int n, double t_l, double delta_t_l, double base_signed_beat_hz) {
  AliasShift s;
  s.shift_hz = alias_shift(n, t_l, delta_t_l);
  const double edge = 0.5 / (t_l + delta_t_l);
  const double shifted = base_signed_beat_hz + s.shift_hz;
  s.in_band = shifted > -edge && shifted < edge;
  return s;
}

AliasResolution resolve_alias(const MeasurementPair& pair, std::span<const int> n_range,
                              std::optional<int> known_sign, const DecisionOptions& opts) {
  const auto* stretch = std::get_if<SequenceStretch>(&pair.modification);
  if (stretch == nullptr) throw InvalidArgument("resolve_alias needs a sequence stretch pair");
  if (n_range.empty()) throw InvalidArgument("empty N range");
  pair.validate();

  const double t_l = pair.first.lo.sequence_length_s;
  const double nu_lo = pair.first.lo.frequency_hz();
  const double delta = pair.first.beat_hz;
  std::vector<int> signs;
  if (known_sign) {
    signs = {*known_sign < 0 ? -1 : 1};
  } else {
    signs = delta == 0.0 ? std::vector<int>{1} : std::vector<int>{1, -1};
  }

  AliasResolution r;
  r.sign_known = known_sign.has_value();
  for (int n : n_range) {
    for (int s : signs) {
      AliasScore c;
      c.n = n;
      c.sign = s;
      const double nu = nu_lo + s * delta + n / t_l;
      c.predicted_hz = beat_note(pair.second.lo, nu).magnitude_hz;
      c.residual_hz = std::abs(pair.second.beat_hz - c.predicted_hz);
      try {
        const double base = beat_note(pair.second.lo, nu_lo + s * delta).signed_hz;
        const AliasShift sh = alias_shift(n, t_l, stretch->delta_t_s, base);
        c.shift_hz = sh.shift_hz;
        c.in_band = sh.in_band;
      } catch (const AliasValidityError&) {
        c.shift_hz = std::numeric_limits<double>::quiet_NaN();
        c.in_band = false;
      }
      r.candidates.push_back(c);
    }
  }

  const auto best = std::min_element(r.candidates.begin(), r.candidates.end(),
                                     [](const auto& a, const auto& b) { return a.residual_hz < b.residual_hz; });
  r.n = best->n;
  r.sign = best->sign;
  r.residual_hz = best->residual_hz;
  double runner_up = kInf;
  for (const AliasScore& c : r.candidates) {
    const bool same = c.n == best->n && c.sign == best->sign;
    const bool mirror = c.n == -best->n && c.sign == -best->sign;
    if (!same && !mirror) runner_up = std::min(runner_up, c.residual_hz);
  }
  r.margin_hz = runner_up - r.residual_hz;
  const double noise = combined_noise(pair.first, pair.second, opts);
  if (r.margin_hz <= noise) {
    throw Inconclusive(Inconclusive::Kind::IndistinguishableCandidates,
                       "alias candidates not separated by the stretched sequence: " + to_json(r));
  }
  if (r.residual_hz > 0.5 * r.margin_hz + noise) {
    throw Inconclusive(Inconclusive::Kind::IndistinguishableCandidates,
                       "stretched beat matches no alias candidate: " + to_json(r));
  }
  return r;
}

std::vector<double> amplitude_candidates(double contrast_ref, double tau_ref, double detuning, double rabi_max) {
  if (!(tau_ref > 0.0)) throw InvalidArgument("reference τ must be > 0");
  std::vector<double> out;
  if (detuning == 0.0) {
    const double x = std::asin(std::clamp(contrast_ref, 0.0, 1.0));
    const double limit = rabi_max * tau_ref;
    for (int k = 0;; ++k) {
      const double a = x + k * kPi;
      const double b = kPi - x + k * kPi;
      if (a > limit) break;
      out.push_back(a / tau_ref);
      if (b <= limit) out.push_back(b / tau_ref);
    }
  } else {
    auto g = [&](double rabi) { return response(rabi, detuning, tau_ref).contrast - contrast_ref; };
    constexpr int kGrid = 8192;
    const double step = rabi_max / kGrid;
    double prev = g(0.0);
    for (int i = 1; i <= kGrid; ++i) {
      const double x = i * step;
      const double cur = g(x);
      if (cur == 0.0) {
        out.push_back(x);
      } else if (prev != 0.0 && (prev < 0.0) != (cur < 0.0)) {
        boost::uintmax_t iters = 100;
        const auto root = boost::math::tools::toms748_solve(g, x - step, x, prev, cur,
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
        out.push_back(0.5 * (root.first + root.second));
      }
      prev = cur;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [&](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(b, 1.0 / tau_ref); }),
            out.end());
  if (contrast_ref > 0.0) std::erase_if(out, [](double v) { return v <= 0.0; });
  return out;
}

AmplitudeResolution resolve_amplitude(std::span<const Measurement> runs, const AmplitudeSearch& search) {
  if (runs.size() < 2) throw InvalidArgument("amplitude resolution needs at least two runs");
  const Measurement& ref = runs.front();
  double tau_min = ref.tau_s;
  bool distinct = false;
  for (const Measurement& m : runs) {
    if (!(m.tau_s > 0.0)) throw InvalidArgument("interaction times must be > 0");
    tau_min = std::min(tau_min, m.tau_s);
    distinct = distinct || m.tau_s != ref.tau_s;
  }
  if (!distinct) throw InvalidArgument("amplitude resolution needs two distinct interaction times");

  const double rabi_max = search.rabi_max.value_or(kPi / tau_min);
  const std::vector<double> cands = amplitude_candidates(ref.contrast, ref.tau_s, search.detuning_rad_per_s, rabi_max);
  if (cands.empty()) throw Inconclusive(Inconclusive::Kind::Unresolved, "no amplitude candidate below the search bound");

  const double s = search.sign < 0 ? -1.0 : 1.0;
  AmplitudeResolution r;
  for (double rabi : cands) {
    const Response r_ref = response(rabi, search.detuning_rad_per_s, ref.tau_s);
    double score = 0.0;
    for (const Measurement& m : runs) {
      const Response pr = response(rabi, search.detuning_rad_per_s, m.tau_s);
      const std::complex<double> z_meas = std::polar(m.contrast, s * (m.beat_phase_rad - ref.beat_phase_rad));
      const std::complex<double> z_pred = std::polar(pr.contrast, pr.offset - r_ref.offset);
      const double ci_c = std::max(m.contrast_ci, search.min_contrast_ci);
      const double var = ci_c * ci_c + std::pow(m.contrast * m.phase_ci_rad, 2);
      score += std::norm(z_meas - z_pred) / var;
    }
    r.candidates.push_back({rabi, score});
  }

  std::vector<AmplitudeCandidate> ranked = r.candidates;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  r.rabi_rad_per_s = ranked.front().rabi_rad_per_s;
  r.margin = ranked.size() > 1 ? std::sqrt(ranked[1].score) - std::sqrt(ranked[0].score) : kInf;
  if (r.margin <= search.margin_sigma) {
    throw Inconclusive(Inconclusive::Kind::Unresolved,
                       "amplitude candidates within the noise margin: " + to_json(r));
  }
  return r;
}

FullResolution resolve_all(const Measurement& primary, std::span<const MeasurementPair> pairs, const Sensor& sensor,
                           const ResolveAllOptions& opts) {
  std::vector<const MeasurementPair*> lo_pairs, stretch_pairs, tau_pairs;
  for (const MeasurementPair& p : pairs) {
    if (std::holds_alternative<LoShift>(p.modification)) lo_pairs.push_back(&p);
    else if (std::holds_alternative<SequenceStretch>(p.modification)) stretch_pairs.push_back(&p);
    else tau_pairs.push_back(&p);
  }

  FullResolution out;
  ResolutionStep sign_step{"sign", false, "{}"};
  std::optional<int> sign;
  for (const MeasurementPair* p : lo_pairs) {
    const SignResolution sr = resolve_sign(*p, opts.decision);
    if (sign && *sign != sr.sign)
      throw Inconclusive(Inconclusive::Kind::Sign, "LO shift pairs disagree on the sign");
    sign = sr.sign;
    sign_step.performed = true;
    sign_step.detail = to_json(sr);
  }

  ResolutionStep alias_step{"alias", false, "{}"};
  int n = 0;
  int s = sign.value_or(1);
  for (const MeasurementPair* p : stretch_pairs) {
    AliasResolution ar = resolve_alias(*p, opts.n_range, sign, opts.decision);
    int an = ar.n, as = ar.sign;
    if (!sign && as < 0) {  // report the +sign member of the mirror class
      an = -an;
      as = 1;
    }
    if (alias_step.performed && (an != n || as != s))
      throw Inconclusive(Inconclusive::Kind::IndistinguishableCandidates, "stretch pairs disagree on N");
    n = an;
    s = as;
    alias_step.performed = true;
    alias_step.detail = to_json(ar);
  }

  const double nu = primary.lo.frequency_hz() + s * primary.beat_hz + n / primary.lo.sequence_length_s;
  const double detuning = kTwoPi * (nu - sensor.resonance_hz);

  ResolutionStep amp_step{"amplitude", false, "{}"};
  double rabi = 0.0;
  if (!tau_pairs.empty()) {
    std::vector<Measurement> runs{primary};
    for (const MeasurementPair* p : tau_pairs) {
      if (!close(p->first.tau_s, primary.tau_s, 0.0, 1e-9))
        throw InvalidArgument("τ pairs must start from the primary interaction time");
      runs.push_back(p->second);
    }
    AmplitudeSearch search;
    search.detuning_rad_per_s = detuning;
    search.rabi_max = opts.rabi_max;
    search.sign = s;
    const AmplitudeResolution amp = resolve_amplitude(runs, search);
    rabi = amp.rabi_rad_per_s;
    amp_step.performed = true;
    amp_step.detail = to_json(amp);
  } else {
    AmplitudeModel model;
    model.gamma_rad_per_s_per_t = sensor.gamma_rad_per_s_per_t;
    model.detuning_rad_per_s = detuning;
    model.tau_s = primary.tau_s;
    rabi = invert_contrast(primary.contrast, primary.contrast_ci, model, 0.0);
  }

  const Response resp = response(rabi, detuning, primary.tau_s);
  out.sign = s;
  out.n = n;
  out.rabi_rad_per_s = rabi;
  out.signal.frequency_hz = nu;
  out.signal.amplitude_tesla = field_from_rabi(rabi, sensor.gamma_rad_per_s_per_t);
  out.signal.phase_rad = wrap_phase(s * primary.beat_phase_rad - resp.offset);
  out.steps = {sign_step, alias_step, amp_step};
  return out;
}

std::string to_json(const SignResolution& r, int indent) { return sign_json(r).dump(indent); }
std::string to_json(const AliasResolution& r, int indent) { return alias_json(r).dump(indent); }
std::string to_json(const AmplitudeResolution& r, int indent) { return amplitude_json(r).dump(indent); }

std::string to_json(const FullResolution& r, int indent) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const ResolutionStep& st : r.steps) {
    steps.push_back({{"name", st.name},
                     {"performed", st.performed},
                     {"result", nlohmann::ordered_json::parse(st.detail)}});
  }
  nlohmann::ordered_json j = {{"signal",
                               {{"frequency_hz", r.signal.frequency_hz},
                                {"amplitude_tesla", r.signal.amplitude_tesla},
                                {"phase_rad", r.signal.phase_rad}}},
                              {"sign", r.sign},
                              {"n", r.n},
                              {"rabi_rad_per_s", r.rabi_rad_per_s},
                              {"steps", steps}};
  return j.dump(indent);
}

}  // namespace qdyne
