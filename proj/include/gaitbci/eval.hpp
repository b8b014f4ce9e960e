#pragma once

#include "gaitbci/exec.hpp"
#include "gaitbci/random.hpp"
#include "gaitbci/session.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gaitbci {

// ---------------------------------------------------------------------------
// Cue/response cross-correlation

enum class XcorrKind {
  Pearson,    // centered and normalized over the overlap
  RawProduct, // uncentered: sum(c r) / sqrt(sum(c^2) sum(r^2))
};

struct XcorrResult {
  std::vector<double> curve; // curve[l] is the correlation at lag l * step
  double max = 0.0;
  double lag_at_max = 0.0; // seconds; the smallest lag attaining the maximum
};

// Correlation of cue[k] with response[k + lag] over the overlap; 0 when either
// side is constant.
double correlation_at_lag(std::span<const std::uint8_t> cue, std::span<const std::uint8_t> response,
                          std::size_t lag, XcorrKind kind = XcorrKind::Pearson);

// Response shifted later only: lags 0 .. floor(max_lag / step).
XcorrResult cross_correlate(std::span<const std::uint8_t> cue, std::span<const std::uint8_t> response, double step,
                            double max_lag = 30.0, XcorrKind kind = XcorrKind::Pearson,
                            std::size_t min_overlap = 10);

// ---------------------------------------------------------------------------
// Omissions and false alarms

struct EventCounts {
  std::size_t omissions = 0;
  std::size_t false_alarms = 0;
  std::vector<double> fa_durations; // seconds, one per false alarm
};

// Omission: a Walk epoch with no Walking sample. False alarm: a Walking onset
// strictly inside an Idle epoch; its duration runs to the end of the Walking
// run or of the epoch, whichever comes first.
EventCounts count_events(const CueSchedule& cues, std::span<const std::uint8_t> walking, double step);

// ---------------------------------------------------------------------------
// AR(1) null model of the posterior sequence: X_{k+1} = alpha X_k + beta W_k,
// W_k ~ U(0, 1), Y_k = clamp(X_k, 0, 1).

struct ARNullModel {
  double alpha = 0.0;
  double beta = 1.0;
  double mu = 0.5;
  double rho = 0.0;
  double sigma2 = 0.0; // sample variance, diagnostic only

  void validate() const;
};

// alpha = rho, beta = 2 mu (1 - alpha).
ARNullModel null_from_moments(double mu, double rho, double sigma2 = 0.0);
ARNullModel fit_null(std::span<const double> posteriors);
std::vector<double> simulate_null(const ARNullModel& model, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Monte Carlo significance

struct MonteCarloConfig {
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  double max_lag = 30.0;
};

struct MonteCarloResult {
  double observed = 0.0;
  double p_value = 1.0;
  std::vector<double> null_max; // per trial, in trial order
};

// Fraction of null maxima strictly greater than the observed maximum.
double empirical_p(double observed, std::span<const double> null_max);

// Each trial draws a null posterior sequence stamped at `decision_times`, runs
// it through the session's state machine and plant, and correlates the plant
// timeline with `cue`. Trial i uses its own seed derived from (seed, i).
MonteCarloResult monte_carlo(double observed_max, std::span<const std::uint8_t> cue,
                             std::span<const double> decision_times, double duration, const ARNullModel& model,
                             const DecoderConfig& decoder, const PlantConfig& plant, const MonteCarloConfig& cfg,
                             Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Threshold calibration

struct CalibrationResult {
  static constexpr double kBinWidth = 0.02;
  std::vector<std::size_t> histogram_idle; // 50 bins over [0, 1]
  std::vector<std::size_t> histogram_walk;
  double p95_idle = 0.0;
  double p5_walk = 0.0;
  double t_idle = 0.0;
  double t_walk = 1.0;
};

// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

// T_W = max(P95 of idle P-bar, P5 of walk P-bar), T_I = min of the two, so the
// pair is ordered however the two phases overlap.
CalibrationResult calibrate(std::span<const double> pbar, std::span<const State> phase);

struct CalibrationLog {
  std::vector<double> pbar;
  std::vector<State> phase;
};

// P-bar values labelled by the cue in force, skipping decisions less than
// `settle` seconds after the start of their cue epoch.
CalibrationLog calibration_log(const StateTrace& trace, const CueSchedule& cues, double settle);

// ---------------------------------------------------------------------------
// Report

struct SessionReport {
  static constexpr int kVersion = 1;
  double xcorr_max = 0.0;
  double lag_at_max = 0.0;
  std::size_t omissions = 0;
  std::size_t false_alarms = 0;
  std::vector<double> fa_durations;
  std::optional<double> p_value;
  std::size_t n_mc = 0;
  std::optional<double> null_max;      // largest null correlation seen
  double decoder_xcorr_max = 0.0;      // decoder state vs cue, diagnostic
  double decoder_lag_at_max = 0.0;
};

SessionReport evaluate_session(const CueSchedule& cues, const SessionResult& session, double max_lag = 30.0);

std::string report_json(const SessionReport& report);
SessionReport parse_report(const std::string& json_text);

} // namespace gaitbci
