#include "gaitbci/decoder.hpp"

#include "gaitbci/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace gaitbci {

void DecoderConfig::validate() const {
  if (!(window.step > 0.0)) throw ConfigError("window_step must be positive");
  if (!(window.length >= window.step)) throw ConfigError("window_length must be at least window_step");
  if (!(avg_horizon > 0.0)) throw ConfigError("avg_horizon must be positive");
  const double ratio = avg_horizon / window.step;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("avg_horizon must be a positive multiple of the window step");
  if (!(t_idle >= 0.0 && t_idle <= 1.0) || !(t_walk >= 0.0 && t_walk <= 1.0))
    throw ConfigError("t_idle and t_walk must lie in [0, 1]");
  if (t_idle > t_walk) throw ConfigError("t_idle must not exceed t_walk");
}

std::size_t DecoderConfig::ring_size() const {
  return static_cast<std::size_t>(std::llround(avg_horizon / window.step));
}

HysteresisDecoder::HysteresisDecoder(const DecoderConfig& cfg)
    : t_idle_(cfg.t_idle), t_walk_(cfg.t_walk), initial_(cfg.initial_state), current_(cfg.initial_state) {
  cfg.validate();
  ring_.assign(cfg.ring_size(), 0.0);
}

void HysteresisDecoder::reset() {
  head_ = 0;
  count_ = 0;
  current_ = initial_;
}

DecoderStep HysteresisDecoder::step(double posterior) {
  if (!(posterior >= 0.0 && posterior <= 1.0))
    throw InputError("posterior " + std::to_string(posterior) + " outside [0, 1]");
  const std::size_t n = ring_.size();
  if (count_ < n) {
    ring_[count_++] = posterior;
  } else {
    ring_[head_] = posterior;
    head_ = (head_ + 1) % n;
  }
  // Oldest to newest, so the sum is independent of the ring's rotation.
  double sum = 0.0;
  const std::size_t start = count_ < n ? 0 : head_;
  for (std::size_t i = 0; i < count_; ++i) sum += ring_[(start + i) % n];
  DecoderStep out;
  out.pbar = sum / static_cast<double>(count_);
  if (count_ == n) {
    if (current_ == State::Idle && out.pbar > t_walk_) {
      current_ = State::Walk;
      out.transition = true;
    } else if (current_ == State::Walk && out.pbar < t_idle_) {
      current_ = State::Idle;
      out.transition = true;
    }
  }
  out.state = current_;
  return out;
}

// ---------------------------------------------------------------------------

void StateTrace::validate() const {
  if (!(step > 0.0)) throw FormatError("trace step must be positive");
  if (times.size() != states.size() || pbar.size() != states.size() || posterior.size() != states.size())
    throw FormatError("trace columns have different lengths");
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(pbar[i] >= 0.0 && pbar[i] <= 1.0) || !(posterior[i] >= 0.0 && posterior[i] <= 1.0))
      throw FormatError("trace value outside [0, 1] at row " + std::to_string(i));
    if (i > 0 && !(times[i] > times[i - 1])) throw FormatError("trace times are not increasing");
  }
}

std::vector<std::uint8_t> StateTrace::timeline(std::size_t n, State initial) const {
  std::vector<std::uint8_t> out(n);
  State s = initial;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    while (next < size() && times[next] <= t + 1e-9) s = states[next++];
    out[k] = s == State::Walk;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_geometry(const PredictionModel& model, const DecoderConfig& cfg) {
  cfg.validate();
  if (std::abs(cfg.window.length - model.window.length) > 1e-12 ||
      std::abs(cfg.window.step - model.window.step) > 1e-12)
    throw ConfigError("decoder window differs from the window the model was trained on");
}

void record(StateTrace& trace, double t, double posterior, const DecoderStep& s) {
  trace.times.push_back(t);
  trace.states.push_back(s.state);
  trace.pbar.push_back(s.pbar);
  trace.posterior.push_back(posterior);
}

} // namespace

OnlineDecoder::OnlineDecoder(const PredictionModel& model, const DecoderConfig& cfg)
    : model_(model), cfg_(cfg), machine_(cfg), length_(cfg.window.length_samples(model.fs)),
      step_(cfg.window.step_samples(model.fs)) {
  check_geometry(model, cfg);
  buffer_.resize(static_cast<Eigen::Index>(model.retained_channels.size()), 0);
  trace_.step = cfg.window.step;
}

std::vector<DecoderStep> OnlineDecoder::push(const Eigen::Ref<const SignalMatrix>& chunk, std::uint64_t first_sample) {
  if (static_cast<std::size_t>(chunk.rows()) != model_.n_channels_total())
    throw GeometryError("stream has " + std::to_string(chunk.rows()) + " channels, model expects " +
                        std::to_string(model_.n_channels_total()));
  if (first_sample != next_sample_)
    throw DecoderError("stream gap at t = " + io::format_double(static_cast<double>(next_sample_) / model_.fs) +
                       " s: expected sample " + std::to_string(next_sample_) + ", got " +
                       std::to_string(first_sample));
  if (!chunk.allFinite())
    throw DecoderError("non-finite sample in chunk starting at t = " +
                       io::format_double(static_cast<double>(first_sample) / model_.fs) + " s");

  const Eigen::Index old_cols = buffer_.cols();
  buffer_.conservativeResize(Eigen::NoChange, old_cols + chunk.cols());
  for (std::size_t r = 0; r < model_.retained_channels.size(); ++r)
    buffer_.row(static_cast<Eigen::Index>(r)).tail(chunk.cols()) =
        chunk.row(static_cast<Eigen::Index>(model_.retained_channels[r]));
  next_sample_ += static_cast<std::uint64_t>(chunk.cols());

  std::vector<DecoderStep> out;
  while (next_window_ + length_ <= next_sample_) {
    const auto offset = static_cast<Eigen::Index>(next_window_ - buffer_start_);
    const double start = static_cast<double>(next_window_) / model_.fs;
    const double p = model_.posterior(
        model_.spectrum(buffer_.middleCols(offset, static_cast<Eigen::Index>(length_)), start));
    const DecoderStep s = machine_.step(p);
    record(trace_, static_cast<double>(next_window_ + length_) / model_.fs, p, s);
    out.push_back(s);
    next_window_ += step_;
  }
  // Drop samples no future window needs.
  if (next_window_ > buffer_start_) {
    const auto drop = static_cast<Eigen::Index>(std::min<std::uint64_t>(next_window_ - buffer_start_,
                                                                        static_cast<std::uint64_t>(buffer_.cols())));
    SignalMatrix rest = buffer_.rightCols(buffer_.cols() - drop);
    buffer_.swap(rest);
    buffer_start_ += static_cast<std::uint64_t>(drop);
  }
  return out;
}

std::vector<double> window_posteriors(const Recording& rec, const PredictionModel& model, const WindowSpec& window,
                                      Exec exec) {
  if (rec.n_channels() != model.n_channels_total())
    throw GeometryError("recording has " + std::to_string(rec.n_channels()) + " channels, model expects " +
                        std::to_string(model.n_channels_total()));
  if (rec.fs() != model.fs) throw GeometryError("recording sampling rate differs from the model's");
  const auto windows = slice_windows(rec, window);
  const auto spectra = compute_spectra(windows, rec.fs(), model.bins(), model.psd, model.retained_channels, exec);
  std::vector<double> out(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) out[i] = model.posterior(spectra[i]);
  return out;
}

StateTrace run_posteriors(std::span<const double> posteriors, const DecoderConfig& cfg, double first_time) {
  HysteresisDecoder machine(cfg);
  StateTrace trace;
  trace.step = cfg.window.step;
  trace.times.reserve(posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i)
    record(trace, first_time + static_cast<double>(i) * cfg.window.step, posteriors[i], machine.step(posteriors[i]));
  return trace;
}

StateTrace run_stream(const Recording& rec, const PredictionModel& model, const DecoderConfig& cfg, Exec exec) {
  check_geometry(model, cfg);
  const auto posteriors = window_posteriors(rec, model, cfg.window, exec);
  const std::size_t len = cfg.window.length_samples(rec.fs()), step = cfg.window.step_samples(rec.fs());
  HysteresisDecoder machine(cfg);
  StateTrace trace;
  trace.step = cfg.window.step;
  for (std::size_t i = 0; i < posteriors.size(); ++i)
    record(trace, static_cast<double>(i * step + len) / rec.fs(), posteriors[i], machine.step(posteriors[i]));
  return trace;
}

// ---------------------------------------------------------------------------

void write_trace(std::ostream& out, const StateTrace& trace) {
  trace.validate();
  out << "# gaitbci state trace\n# version 1\n# step " << io::format_double(trace.step)
      << "\n# columns: t state pbar posterior\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << io::format_double(trace.times[i]) << ' ' << to_string(trace.states[i]) << ' '
        << io::format_double(trace.pbar[i]) << ' ' << io::format_double(trace.posterior[i]) << '\n';
}

void write_trace(const std::filesystem::path& path, const StateTrace& trace) {
  std::ostringstream s;
  write_trace(s, trace);
  io::write_file_atomic(path, s.str());
}

StateTrace read_trace(std::istream& in) {
  StateTrace trace;
  std::string line;
  bool have_step = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string key;
      h >> key;
      if (key == "version") {
        int v = 0;
        h >> v;
        if (v != 1) throw FormatError("unsupported state trace version " + std::to_string(v));
      } else if (key == "step") {
        if (!(h >> trace.step)) throw FormatError("bad step line in state trace");
        have_step = true;
      }
      continue;
    }
    std::istringstream row(line);
    double t = 0.0, pbar = 0.0, post = 0.0;
    std::string state;
    if (!(row >> t >> state >> pbar >> post))
      throw FormatError("malformed state trace row at line " + std::to_string(line_no));
    trace.times.push_back(t);
    trace.states.push_back(parse_state(state));
    trace.pbar.push_back(pbar);
    trace.posterior.push_back(post);
  }
  if (!have_step) throw FormatError("state trace has no step header");
  trace.validate();
  return trace;
}

StateTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_trace(in);
}

} // namespace gaitbci
