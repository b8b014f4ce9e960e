#include "gaitbci/signal.hpp"

#include "fft.hpp"
#include "gaitbci/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace gaitbci {

std::string_view to_string(State s) { return s == State::Walk ? "walk" : "idle"; }

State parse_state(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "idle" || lower == "i" || lower == "0") return State::Idle;
  if (lower == "walk" || lower == "w" || lower == "1") return State::Walk;
  throw FormatError("unknown state '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Recording

Recording::Recording(SignalMatrix samples, double fs, std::vector<std::string> channel_labels,
                     double t0)
    : samples_(std::move(samples)), fs_(fs), labels_(std::move(channel_labels)), t0_(t0) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw DataError("sampling rate must be positive");
  if (labels_.size() != n_channels())
    throw DataError("channel label count " + std::to_string(labels_.size()) +
                    " does not match channel count " + std::to_string(n_channels()));
  if (!samples_.allFinite()) throw DataError("recording contains NaN or Inf samples");
  if (!std::isfinite(t0_)) throw DataError("start time must be finite");
}

Recording Recording::with_channel_order(const std::vector<std::size_t>& order) const {
  if (order.size() != n_channels()) throw ConfigError("permutation size mismatch");
  SignalMatrix out(samples_.rows(), samples_.cols());
  std::vector<std::string> labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= n_channels()) throw ConfigError("permutation index out of range");
    out.row(static_cast<Eigen::Index>(i)) = samples_.row(static_cast<Eigen::Index>(order[i]));
    labels[i] = labels_[order[i]];
  }
  return Recording(std::move(out), fs_, std::move(labels), t0_);
}

std::vector<std::string> default_channel_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = "EEG" + std::to_string(i);
  return labels;
}

// ---------------------------------------------------------------------------
// CueSchedule

CueSchedule::CueSchedule(std::vector<CueEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_)
    if (!(e.duration > 0.0) || !std::isfinite(e.duration))
      throw ConfigError("cue durations must be positive");
}

CueSchedule CueSchedule::alternating(std::size_t n_epochs, double epoch_seconds, State first) {
  std::vector<CueEntry> entries;
  entries.reserve(n_epochs);
  State s = first;
  for (std::size_t i = 0; i < n_epochs; ++i) {
    entries.push_back({s, epoch_seconds});
    s = s == State::Idle ? State::Walk : State::Idle;
  }
  return CueSchedule(std::move(entries));
}

double CueSchedule::total() const {
  double t = 0.0;
  for (const auto& e : entries_) t += e.duration;
  return t;
}

State CueSchedule::state_at(double t) const {
  if (entries_.empty()) throw AlignmentError("empty cue schedule");
  double end = 0.0;
  for (const auto& e : entries_) {
    end += e.duration;
    if (t < end) return e.state;
  }
  return entries_.back().state;
}

std::vector<std::uint8_t> CueSchedule::timeline(double step, std::size_t n) const {
  if (!(step > 0.0)) throw ConfigError("timeline step must be positive");
  std::vector<std::uint8_t> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = state_at(static_cast<double>(k) * step) == State::Walk ? 1 : 0;
  return out;
}

std::size_t CueSchedule::count(State s) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [s](const CueEntry& e) { return e.state == s; }));
}

std::vector<LabeledEpoch> label_epochs(const Recording& rec, const CueSchedule& cues, double guard) {
  if (cues.empty()) throw AlignmentError("empty cue schedule");
  if (!(guard >= 0.0)) throw ConfigError("guard margin must be non-negative");
  // Half a sample of slack absorbs rounding in the cue durations.
  if (cues.total() > rec.duration() + 0.5 / rec.fs())
    throw AlignmentError("cue schedule (" + std::to_string(cues.total()) +
                         " s) is longer than the recording (" + std::to_string(rec.duration()) +
                         " s)");
  std::vector<LabeledEpoch> epochs;
  epochs.reserve(cues.entries().size());
  double t = 0.0;
  for (const auto& e : cues.entries()) {
    if (2.0 * guard >= e.duration)
      throw ConfigError("guard margin consumes a whole " + std::to_string(e.duration) + " s epoch");
    epochs.push_back({e.state, t + guard, t + e.duration - guard});
    t += e.duration;
  }
  return epochs;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthConfig::validate() const {
  if (n_channels == 0) throw ConfigError("n_channels must be positive");
  if (!(fs > 0.0)) throw ConfigError("fs must be positive");
  const double nyquist = fs / 2.0;
  if (!(erd_band.first > 0.0) || !(erd_band.second > erd_band.first) || !(erd_band.second < nyquist))
    throw ConfigError("erd_band must satisfy 0 < lo < hi < fs/2");
  if (!(erd_depth >= 0.0 && erd_depth <= 1.0)) throw ConfigError("erd_depth must lie in [0, 1]");
  if (!std::isfinite(noise_exponent) || noise_exponent < 0.0)
    throw ConfigError("noise_exponent must be a finite non-negative number");
  if (!(amplitude_scale > 0.0)) throw ConfigError("amplitude_scale must be positive");
  if (!(oscillator_snr >= 0.0)) throw ConfigError("oscillator_snr must be non-negative");
  if (!(low_cutoff > 0.0) || !(low_cutoff < nyquist)) throw ConfigError("low_cutoff must lie in (0, fs/2)");
  for (auto c : active_channels)
    if (c >= n_channels) throw ConfigError("active_channels contains out-of-range index " + std::to_string(c));
}

namespace {

enum class Component : std::uint64_t { Background = 1, Oscillator = 2 };

std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

// Shapes white noise by a real amplitude response `gain[k]` (k = 0..n/2) and
// rescales the result to the requested standard deviation.
std::vector<double> shaped_noise(std::size_t n, std::uint64_t seed, const std::vector<double>& gain,
                                 double target_sd) {
  std::vector<double> x = gaussian_noise(n, seed);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  detail::rfft(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= gain[k];
  detail::irfft(spec, x);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (auto& v : x) {
    v -= mean;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  const double scale = sd > 0.0 ? target_sd / sd : 0.0;
  for (auto& v : x) v *= scale;
  return x;
}

// Constant-amplitude rhythm whose instantaneous frequency wanders slowly
// around the band centre, staying within the middle half of the band.
// Unlike band-limited noise, its power over a short window is nearly
// constant, so windowed band power tracks the cue rather than the
// oscillator's own amplitude fluctuations.
std::vector<double> oscillator(std::size_t n, const SynthConfig& cfg, std::uint64_t seed, double sd) {
  const double df = cfg.fs / static_cast<double>(n);
  std::vector<double> wander_gain(n / 2 + 1, 0.0);
  for (std::size_t k = 1; k < wander_gain.size(); ++k)
    if (static_cast<double>(k) * df < 0.5) wander_gain[k] = 1.0;
  const auto wander = shaped_noise(n, derive_seed(seed, 0, 1), wander_gain, 1.0);
  const double centre = 0.5 * (cfg.erd_band.first + cfg.erd_band.second);
  const double half_width = 0.25 * (cfg.erd_band.second - cfg.erd_band.first);
  Rng rng(derive_seed(seed, 0, 2));
  double phase = 2.0 * std::numbers::pi * uniform01(rng);
  const double amplitude = std::sqrt(2.0) * sd;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::cos(phase);
    const double f = centre + half_width * std::tanh(wander[i]);
    phase = std::fmod(phase + 2.0 * std::numbers::pi * f / cfg.fs, 2.0 * std::numbers::pi);
  }
  return x;
}

} // namespace

Recording generate_synthetic(const SynthConfig& cfg, const CueSchedule& cues) {
  cfg.validate();
  if (cues.empty()) throw ConfigError("cue schedule is empty");

  const auto n = static_cast<std::size_t>(std::llround(cues.total() * cfg.fs));
  if (n < 4) throw ConfigError("cue schedule shorter than four samples");
  const std::size_t n_freq = n / 2 + 1;
  const double df = cfg.fs / static_cast<double>(n);

  // Background amplitude response |A(f)| = f^(-exponent/2), flat below low_cutoff.
  std::vector<double> bg_gain(n_freq);
  double bg_total = 0.0, bg_band = 0.0;
  for (std::size_t k = 1; k < n_freq; ++k) {
    const double f = static_cast<double>(k) * df;
    bg_gain[k] = std::pow(std::max(f, cfg.low_cutoff), -cfg.noise_exponent / 2.0);
    const double weight = (2 * k == n) ? 1.0 : 2.0; // one-sided power
    const double p = weight * bg_gain[k] * bg_gain[k];
    bg_total += p;
    if (f >= cfg.erd_band.first && f < cfg.erd_band.second) bg_band += p;
  }
  bg_gain[0] = 0.0;
  const double band_fraction = bg_total > 0.0 ? bg_band / bg_total : 0.0;
  const double osc_sd =
      cfg.amplitude_scale * std::sqrt(cfg.oscillator_snr * band_fraction);

  // Per-sample oscillator gain from the cue track.
  std::vector<double> cue_gain(n, 1.0);
  const double walk_gain = std::sqrt(1.0 - cfg.erd_depth);
  for (std::size_t i = 0; i < n; ++i)
    if (cues.state_at(static_cast<double>(i) / cfg.fs) == State::Walk) cue_gain[i] = walk_gain;

  std::vector<bool> active(cfg.n_channels, false);
  for (auto c : cfg.active_channels) active[c] = true;

  SignalMatrix samples(static_cast<Eigen::Index>(cfg.n_channels), static_cast<Eigen::Index>(n));
  for (std::size_t ch = 0; ch < cfg.n_channels; ++ch) {
    auto bg = shaped_noise(n, derive_seed(cfg.seed, ch, static_cast<std::uint64_t>(Component::Background)),
                           bg_gain, cfg.amplitude_scale);
    auto row = samples.row(static_cast<Eigen::Index>(ch));
    for (std::size_t i = 0; i < n; ++i) row(static_cast<Eigen::Index>(i)) = bg[i];
    if (active[ch] && osc_sd > 0.0) {
      const auto osc = oscillator(n, cfg, derive_seed(cfg.seed, ch, static_cast<std::uint64_t>(Component::Oscillator)),
                                  osc_sd);
      for (std::size_t i = 0; i < n; ++i) row(static_cast<Eigen::Index>(i)) += cue_gain[i] * osc[i];
    }
  }
  return Recording(std::move(samples), cfg.fs, default_channel_labels(cfg.n_channels), 0.0);
}

} // namespace gaitbci
