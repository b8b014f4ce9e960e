#pragma once

#include "gaitbci/spectral.hpp"
#include "gaitbci/training.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace gaitbci {

struct DecoderConfig {
  WindowSpec window;
  double avg_horizon = 2.0; // seconds of posteriors averaged into P-bar
  double t_idle = 0.3;      // Walk -> Idle when P-bar < t_idle
  double t_walk = 0.7;      // Idle -> Walk when P-bar > t_walk
  State initial_state = State::Idle;

  void validate() const;
  // Posteriors held by the averaging ring (avg_horizon / step).
  std::size_t ring_size() const;
};

struct DecoderStep {
  State state = State::Idle;
  double pbar = 0.0;
  bool transition = false;
};

// Dual-threshold state machine over the running mean of the last ring_size()
// posteriors. No transition happens before the ring is full; until then P-bar
// is the mean of the entries seen so far.
class HysteresisDecoder {
public:
  explicit HysteresisDecoder(const DecoderConfig& cfg);

  DecoderStep step(double posterior);
  State state() const { return current_; }
  std::size_t filled() const { return count_; }
  void reset();

private:
  double t_idle_, t_walk_;
  State initial_;
  std::vector<double> ring_;
  std::size_t head_ = 0; // slot of the oldest entry once full
  std::size_t count_ = 0;
  State current_;
};

// Decoder output at the 4 Hz decision rate. times[i] is the end of the i-th
// analysis window, i.e. when the decision becomes available.
struct StateTrace {
  double step = 0.25;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> pbar;
  std::vector<double> posterior; // single-window P(Walk | f)

  std::size_t size() const { return states.size(); }
  void validate() const;
  // State held at t_k = k * step for k in [0, n): the latest decision at or
  // before t_k, or `initial` before the first one. 1 = Walk.
  std::vector<std::uint8_t> timeline(std::size_t n, State initial = State::Idle) const;
};

// Sliding-window decoder fed by a sample stream. Windows are cut on the same
// grid as slice_windows, so streaming a recording chunk by chunk yields the
// same trace as run_stream on the whole file.
class OnlineDecoder {
public:
  OnlineDecoder(const PredictionModel& model, const DecoderConfig& cfg);

  // `chunk` holds every channel of the training montage (rows) for a run of
  // consecutive samples starting at sample index `first_sample`. A chunk that
  // does not start where the previous one ended is a gap.
  std::vector<DecoderStep> push(const Eigen::Ref<const SignalMatrix>& chunk, std::uint64_t first_sample);
  std::vector<DecoderStep> push(const Eigen::Ref<const SignalMatrix>& chunk) { return push(chunk, next_sample_); }

  const StateTrace& trace() const { return trace_; }
  std::uint64_t next_sample() const { return next_sample_; }

private:
  PredictionModel model_;
  DecoderConfig cfg_;
  HysteresisDecoder machine_;
  std::size_t length_, step_;
  SignalMatrix buffer_;           // retained channels, samples from buffer_start_
  std::uint64_t buffer_start_ = 0;
  std::uint64_t next_window_ = 0; // start sample of the next window
  std::uint64_t next_sample_ = 0;
  StateTrace trace_;
};

// Replays a recording through the model and state machine.
StateTrace run_stream(const Recording& rec, const PredictionModel& model, const DecoderConfig& cfg,
                      Exec exec = Exec::Parallel);

// Single-window posteriors of a whole recording, in window order.
std::vector<double> window_posteriors(const Recording& rec, const PredictionModel& model, const WindowSpec& window,
                                      Exec exec = Exec::Parallel);

// State machine over a given posterior sequence; decision i is stamped
// first_time + i * step.
StateTrace run_posteriors(std::span<const double> posteriors, const DecoderConfig& cfg, double first_time);

void write_trace(std::ostream& out, const StateTrace& trace);
void write_trace(const std::filesystem::path& path, const StateTrace& trace);
StateTrace read_trace(std::istream& in);
StateTrace read_trace(const std::filesystem::path& path);

} // namespace gaitbci
