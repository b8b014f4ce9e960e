#pragma once

#include "gaitbci/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gaitbci {

// Two mental states used throughout: the cue labels, the decoder output and
// the classifier classes all share this enum.
enum class State : std::uint8_t { Idle = 0, Walk = 1 };

inline constexpr std::size_t kStateCount = 2;
inline constexpr std::size_t index_of(State s) { return static_cast<std::size_t>(s); }
std::string_view to_string(State s);
State parse_state(std::string_view text);

// channels x time, each channel contiguous.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Multichannel time series in microvolts. Validated on construction and
// immutable afterwards.
class Recording {
public:
  Recording(SignalMatrix samples, double fs, std::vector<std::string> channel_labels,
            double t0 = 0.0);

  const SignalMatrix& samples() const { return samples_; }
  double fs() const { return fs_; }
  double t0() const { return t0_; }
  const std::vector<std::string>& channel_labels() const { return labels_; }

  std::size_t n_channels() const { return static_cast<std::size_t>(samples_.rows()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(samples_.cols()); }
  double duration() const { return static_cast<double>(n_samples()) / fs_; }

  // Same samples with channels reordered; used by permutation checks.
  Recording with_channel_order(const std::vector<std::size_t>& order) const;

private:
  SignalMatrix samples_;
  double fs_;
  std::vector<std::string> labels_;
  double t0_;
};

std::vector<std::string> default_channel_labels(std::size_t n);

struct CueEntry {
  State state = State::Idle;
  double duration = 0.0; // seconds
};

class CueSchedule {
public:
  CueSchedule() = default;
  explicit CueSchedule(std::vector<CueEntry> entries);

  // n epochs of equal length, alternating, starting with `first`.
  static CueSchedule alternating(std::size_t n_epochs, double epoch_seconds,
                                 State first = State::Idle);

  const std::vector<CueEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  double total() const;
  // Cue active at time t; times past the end report the last entry.
  State state_at(double t) const;
  // Cue sampled at t_k = k * step for k in [0, n); 1 = Walk.
  std::vector<std::uint8_t> timeline(double step, std::size_t n) const;
  std::size_t count(State s) const;

private:
  std::vector<CueEntry> entries_;
};

struct LabeledEpoch {
  State cls = State::Idle;
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

// Cue-aligned epochs; `guard` seconds are trimmed from both ends of each.
std::vector<LabeledEpoch> label_epochs(const Recording& rec, const CueSchedule& cues,
                                       double guard = 0.0);

struct SynthConfig {
  std::size_t n_channels = 64;
  double fs = 256.0;
  std::vector<std::size_t> active_channels{8, 9, 10, 11, 12};
  std::pair<double, double> erd_band{8.0, 12.0};
  double erd_depth = 0.6;
  double noise_exponent = 1.0;   // background PSD ~ 1/f^exponent
  double amplitude_scale = 10.0; // background standard deviation, microvolts
  // Idle-state oscillator power relative to background power inside erd_band.
  double oscillator_snr = 30.0;
  double low_cutoff = 0.5; // background spectrum is flat below this (Hz)
  std::uint64_t seed = 1;

  void validate() const;
};

// 1/f background on every channel plus a narrowband erd_band oscillator on the
// active channels whose amplitude drops by sqrt(1 - erd_depth) during Walk cues.
// The oscillator has constant amplitude and a slowly wandering frequency.
Recording generate_synthetic(const SynthConfig& cfg, const CueSchedule& cues);

} // namespace gaitbci
