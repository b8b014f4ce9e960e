#include "gaitbci/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>

namespace gaitbci {

// ---------------------------------------------------------------------------
// Cross-correlation

double correlation_at_lag(std::span<const std::uint8_t> cue, std::span<const std::uint8_t> response,
                          std::size_t lag, XcorrKind kind) {
  if (cue.size() != response.size()) throw AlignmentError("cue and response lengths differ");
  if (lag >= cue.size()) throw InsufficientDataError("lag leaves no overlap");
  const std::size_t m = cue.size() - lag;
  // Binary inputs: every sum is an exact integer.
  double sc = 0.0, sr = 0.0, scr = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double c = cue[k] ? 1.0 : 0.0, r = response[k + lag] ? 1.0 : 0.0;
    sc += c;
    sr += r;
    scr += c * r;
  }
  if (kind == XcorrKind::RawProduct) {
    const double denom = std::sqrt(sc * sr);
    return denom > 0.0 ? scr / denom : 0.0;
  }
  const double n = static_cast<double>(m);
  const double cov = n * scr - sc * sr;
  const double vc = n * sc - sc * sc, vr = n * sr - sr * sr;
  if (vc <= 0.0 || vr <= 0.0) return 0.0;
  return cov / std::sqrt(vc * vr);
}

XcorrResult cross_correlate(std::span<const std::uint8_t> cue, std::span<const std::uint8_t> response, double step,
                            double max_lag, XcorrKind kind, std::size_t min_overlap) {
  if (cue.size() != response.size())
    throw AlignmentError("cue has " + std::to_string(cue.size()) + " samples, response " +
                         std::to_string(response.size()));
  if (!(step > 0.0) || !(max_lag >= 0.0)) throw ConfigError("cross-correlation needs step > 0 and max_lag >= 0");
  const auto lags = static_cast<std::size_t>(std::floor(max_lag / step + 1e-9));
  if (cue.size() < lags + std::max<std::size_t>(min_overlap, 1))
    throw InsufficientDataError("overlap at the largest lag is shorter than " + std::to_string(min_overlap) +
                                " steps");
  XcorrResult r;
  r.curve.resize(lags + 1);
  std::size_t best = 0;
  for (std::size_t l = 0; l <= lags; ++l) {
    r.curve[l] = correlation_at_lag(cue, response, l, kind);
    if (r.curve[l] > r.curve[best]) best = l;
  }
  r.max = r.curve[best];
  r.lag_at_max = static_cast<double>(best) * step;
  return r;
}

// ---------------------------------------------------------------------------
// Events

EventCounts count_events(const CueSchedule& cues, std::span<const std::uint8_t> walking, double step) {
  if (cues.empty()) throw EmptyInputError("no cues");
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  const auto expected = static_cast<std::size_t>(std::llround(cues.total() / step));
  if (walking.size() != expected)
    throw AlignmentError("timeline has " + std::to_string(walking.size()) + " samples, cues span " +
                         std::to_string(expected));
  EventCounts out;
  double t = 0.0;
  for (const auto& e : cues.entries()) {
    const auto a = static_cast<std::size_t>(std::llround(t / step));
    t += e.duration;
    const auto b = std::min(walking.size(), static_cast<std::size_t>(std::llround(t / step)));
    if (e.state == State::Walk) {
      bool any = false;
      for (std::size_t k = a; k < b && !any; ++k) any = walking[k] != 0;
      out.omissions += !any;
      continue;
    }
    for (std::size_t k = a + 1; k < b; ++k) {
      if (!walking[k] || walking[k - 1]) continue;
      std::size_t end = k;
      while (end < b && walking[end]) ++end;
      ++out.false_alarms;
      out.fa_durations.push_back(static_cast<double>(end - k) * step);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// AR null model

void ARNullModel::validate() const {
  if (!std::isfinite(alpha) || !(std::abs(alpha) < 1.0)) throw NumericalError("AR model is not stable (|alpha| >= 1)");
  if (!(beta >= 0.0)) throw NumericalError("AR model needs beta >= 0");
}

ARNullModel null_from_moments(double mu, double rho, double sigma2) {
  ARNullModel m;
  m.mu = mu;
  m.rho = rho;
  m.sigma2 = sigma2;
  m.alpha = rho;
  m.beta = 2.0 * mu * (1.0 - m.alpha);
  m.validate();
  return m;
}

ARNullModel fit_null(std::span<const double> p) {
  if (p.size() < 100) throw InsufficientDataError("null fit needs at least 100 posteriors, got " + std::to_string(p.size()));
  for (double v : p)
    if (!std::isfinite(v)) throw InputError("non-finite posterior");
  // Summation rounding leaves a tiny variance for a constant sequence, so
  // check constancy directly.
  if (std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); }))
    throw DegenerateDataError("posterior sequence has zero variance");
  const double n = static_cast<double>(p.size());
  double mu = 0.0;
  for (double v : p) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : p) var += (v - mu) * (v - mu);
  var /= n - 1.0;
  if (!(var > 0.0)) throw DegenerateDataError("posterior sequence has zero variance");

  // Pearson correlation of (P_k, P_{k+1}).
  const std::size_t m = p.size() - 1;
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    ma += p[k];
    mb += p[k + 1];
  }
  ma /= static_cast<double>(m);
  mb /= static_cast<double>(m);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = p[k] - ma, b = p[k + 1] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DegenerateDataError("lagged posterior sequence has zero variance");
  const double rho = sab / std::sqrt(saa * sbb);
  if (!(std::abs(rho) < 1.0)) throw NumericalError("lag-1 correlation " + std::to_string(rho) + " gives an unstable AR model");
  return null_from_moments(mu, rho, var);
}

std::vector<double> simulate_null(const ARNullModel& model, std::size_t n, Rng& rng) {
  model.validate();
  std::vector<double> y(n);
  double x = uniform01(rng);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = std::clamp(x, 0.0, 1.0);
    x = model.alpha * x + model.beta * uniform01(rng);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Monte Carlo

double empirical_p(double observed, std::span<const double> null_max) {
  if (null_max.empty()) throw EmptyInputError("no Monte Carlo trials");
  std::size_t above = 0;
  for (double v : null_max) above += v > observed;
  return static_cast<double>(above) / static_cast<double>(null_max.size());
}

namespace {

double null_trial(std::size_t i, std::span<const std::uint8_t> cue, std::span<const double> decision_times,
                  double duration, const ARNullModel& model, const DecoderConfig& decoder, const PlantConfig& plant,
                  const MonteCarloConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, i, 0x3C));
  const auto y = simulate_null(model, decision_times.size(), rng);
  HysteresisDecoder machine(decoder);
  Plant p(plant);
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (decision_times[k] > duration) break;
    p.command(machine.step(y[k]).state, decision_times[k]);
  }
  p.advance_to(std::max(duration, p.now()));
  const auto walking = walking_timeline(p.log(), decoder.window.step, cue.size());
  return cross_correlate(cue, walking, decoder.window.step, cfg.max_lag).max;
}

} // namespace

MonteCarloResult monte_carlo(double observed_max, std::span<const std::uint8_t> cue,
                             std::span<const double> decision_times, double duration, const ARNullModel& model,
                             const DecoderConfig& decoder, const PlantConfig& plant, const MonteCarloConfig& cfg,
                             Exec exec) {
  if (cfg.trials < 1) throw ConfigError("Monte Carlo needs at least one trial");
  model.validate();
  decoder.validate();
  plant.validate();
  MonteCarloResult r;
  r.observed = observed_max;
  r.null_max.assign(cfg.trials, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(cfg.trials);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      r.null_max[i] = null_trial(static_cast<std::size_t>(i), cue, decision_times, duration, model, decoder, plant, cfg);
  } else {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        r.null_max[i] =
            null_trial(static_cast<std::size_t>(i), cue, decision_times, duration, model, decoder, plant, cfg);
      } catch (...) {
#pragma omp critical(gaitbci_mc_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }
  r.p_value = empirical_p(observed_max, r.null_max);
  return r;
}

// ---------------------------------------------------------------------------
// Calibration

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInputError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CalibrationResult calibrate(std::span<const double> pbar, std::span<const State> phase) {
  if (pbar.size() != phase.size()) throw AlignmentError("P-bar and phase labels differ in length");
  CalibrationResult r;
  const auto n_bins = static_cast<std::size_t>(std::llround(1.0 / CalibrationResult::kBinWidth));
  r.histogram_idle.assign(n_bins, 0);
  r.histogram_walk.assign(n_bins, 0);
  std::vector<double> idle, walk;
  for (std::size_t i = 0; i < pbar.size(); ++i) {
    if (!(pbar[i] >= 0.0 && pbar[i] <= 1.0)) throw InputError("P-bar value outside [0, 1]");
    const auto bin = std::min(n_bins - 1, static_cast<std::size_t>(pbar[i] / CalibrationResult::kBinWidth));
    if (phase[i] == State::Idle) {
      idle.push_back(pbar[i]);
      ++r.histogram_idle[bin];
    } else {
      walk.push_back(pbar[i]);
      ++r.histogram_walk[bin];
    }
  }
  if (idle.empty() || walk.empty()) throw InsufficientDataError("calibration log must contain both idle and walk phases");
  r.p95_idle = percentile(idle, 0.95);
  r.p5_walk = percentile(walk, 0.05);
  r.t_walk = std::max(r.p95_idle, r.p5_walk);
  r.t_idle = std::min(r.p95_idle, r.p5_walk);
  return r;
}

CalibrationLog calibration_log(const StateTrace& trace, const CueSchedule& cues, double settle) {
  if (cues.empty()) throw EmptyInputError("no cues");
  if (!(settle >= 0.0)) throw ConfigError("settle must be non-negative");
  CalibrationLog log;
  std::size_t epoch = 0;
  double epoch_start = 0.0;
  const auto& entries = cues.entries();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double t = trace.times[i];
    while (epoch < entries.size() && t >= epoch_start + entries[epoch].duration) epoch_start += entries[epoch++].duration;
    if (epoch == entries.size()) break;
    if (t - epoch_start < settle) continue;
    log.pbar.push_back(trace.pbar[i]);
    log.phase.push_back(entries[epoch].state);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Report

SessionReport evaluate_session(const CueSchedule& cues, const SessionResult& session, double max_lag) {
  const double step = session.trace.step;
  const auto cue = cues.timeline(step, session.walking.size());
  SessionReport r;
  const auto plant_xc = cross_correlate(cue, session.walking, step, max_lag);
  r.xcorr_max = plant_xc.max;
  r.lag_at_max = plant_xc.lag_at_max;
  const auto events = count_events(cues, session.walking, step);
  r.omissions = events.omissions;
  r.false_alarms = events.false_alarms;
  r.fa_durations = events.fa_durations;
  if (session.decoded.size() == cue.size()) {
    const auto dec_xc = cross_correlate(cue, session.decoded, step, max_lag);
    r.decoder_xcorr_max = dec_xc.max;
    r.decoder_lag_at_max = dec_xc.lag_at_max;
  }
  return r;
}

std::string report_json(const SessionReport& r) {
  using nlohmann::json;
  json j;
  j["schema"] = "gaitbci.session_report";
  j["version"] = SessionReport::kVersion;
  j["xcorr_max"] = r.xcorr_max;
  j["lag_at_max"] = r.lag_at_max;
  j["omissions"] = r.omissions;
  j["false_alarms"] = r.false_alarms;
  j["fa_durations"] = r.fa_durations;
  j["p_value"] = r.p_value ? json(*r.p_value) : json(nullptr);
  j["n_mc"] = r.n_mc;
  j["null_max"] = r.null_max ? json(*r.null_max) : json(nullptr);
  j["decoder_xcorr_max"] = r.decoder_xcorr_max;
  j["decoder_lag_at_max"] = r.decoder_lag_at_max;
  return j.dump(1) + "\n";
}

SessionReport parse_report(const std::string& text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "gaitbci.session_report") throw FormatError("not a session report");
    if (j.at("version").get<int>() != SessionReport::kVersion) throw FormatError("unsupported session report version");
    SessionReport r;
    r.xcorr_max = j.at("xcorr_max").get<double>();
    r.lag_at_max = j.at("lag_at_max").get<double>();
    r.omissions = j.at("omissions").get<std::size_t>();
    r.false_alarms = j.at("false_alarms").get<std::size_t>();
    r.fa_durations = j.at("fa_durations").get<std::vector<double>>();
    if (!j.at("p_value").is_null()) r.p_value = j.at("p_value").get<double>();
    r.n_mc = j.at("n_mc").get<std::size_t>();
    if (!j.at("null_max").is_null()) r.null_max = j.at("null_max").get<double>();
    r.decoder_xcorr_max = j.at("decoder_xcorr_max").get<double>();
    r.decoder_lag_at_max = j.at("decoder_lag_at_max").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed session report: ") + e.what());
  }
}

} // namespace gaitbci
