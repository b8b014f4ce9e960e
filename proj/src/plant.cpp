#include "gaitbci/plant.hpp"

#include "gaitbci/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace gaitbci {

void PlantConfig::validate() const {
  if (!(startup_latency >= 0.0) || !(shutdown_latency >= 0.0) || !(command_latency >= 0.0))
    throw ConfigError("startup_latency, shutdown_latency and command_latency must be non-negative");
  if (!(gait_cadence > 0.0)) throw ConfigError("gait_cadence must be positive");
  if (!(gyro_amplitude > 0.0)) throw ConfigError("gyro_amplitude must be positive");
}

std::string_view to_string(Phase p) {
  switch (p) {
  case Phase::Stopped: return "stopped";
  case Phase::StartingUp: return "starting_up";
  case Phase::Walking: return "walking";
  case Phase::ShuttingDown: return "shutting_down";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  for (Phase p : {Phase::Stopped, Phase::StartingUp, Phase::Walking, Phase::ShuttingDown})
    if (text == to_string(p)) return p;
  throw FormatError("unknown plant phase '" + std::string(text) + "'");
}

Plant::Plant(const PlantConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  log_.push_back({0.0, Phase::Stopped});
}

void Plant::enter(Phase p, double t) {
  phase_ = p;
  log_.push_back({t, p});
}

Phase Plant::advance_to(double t) {
  if (!(t >= now_))
    throw SimulationError("time went backwards: " + io::format_double(t) + " < " + io::format_double(now_));
  for (;;) {
    if (pending_ && pending_->first <= t) {
      const auto [when, phase] = *pending_;
      pending_.reset();
      enter(phase, when);
      continue;
    }
    const double entered = log_.back().t;
    if (phase_ == Phase::StartingUp && entered + cfg_.startup_latency <= t) {
      enter(Phase::Walking, entered + cfg_.startup_latency);
      continue;
    }
    if (phase_ == Phase::ShuttingDown && entered + cfg_.shutdown_latency <= t) {
      enter(Phase::Stopped, entered + cfg_.shutdown_latency);
      continue;
    }
    break;
  }
  now_ = t;
  return phase_;
}

Phase Plant::advance(double dt) {
  if (!(dt > 0.0)) throw SimulationError("advance needs dt > 0");
  return advance_to(now_ + dt);
}

bool Plant::command(State cmd, double t) {
  advance_to(t);
  if (pending_) return false;
  if (cmd == State::Walk && phase_ == Phase::Stopped)
    pending_.emplace(t + cfg_.command_latency, Phase::StartingUp);
  else if (cmd == State::Idle && phase_ == Phase::Walking)
    pending_.emplace(t + cfg_.command_latency, Phase::ShuttingDown);
  else
    return false;
  advance_to(t); // zero command latency takes effect immediately
  return true;
}

// ---------------------------------------------------------------------------

namespace {

// [start, end) of every Walking phase; the last may be open-ended.
std::vector<std::pair<double, double>> walking_intervals(const PlantLog& log) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].phase != Phase::Walking) continue;
    const double end = i + 1 < log.size() ? log[i + 1].t : std::numeric_limits<double>::infinity();
    if (end > log[i].t) out.emplace_back(log[i].t, end);
  }
  return out;
}

} // namespace

Phase phase_at(const PlantLog& log, double t) {
  Phase p = Phase::Stopped;
  for (const auto& e : log) {
    if (e.t > t) break;
    p = e.phase;
  }
  return p;
}

std::vector<std::uint8_t> walking_timeline(const PlantLog& log, double step, std::size_t n) {
  if (!(step > 0.0)) throw ConfigError("timeline step must be positive");
  std::vector<std::uint8_t> out(n, 0);
  std::size_t next = 0;
  Phase p = Phase::Stopped;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    while (next < log.size() && log[next].t <= t) p = log[next++].phase;
    out[k] = p == Phase::Walking;
  }
  return out;
}

Recording gyro(const PlantLog& log, const PlantConfig& cfg, double fs, double duration) {
  cfg.validate();
  if (!(fs > 0.0) || !(duration > 0.0)) throw ConfigError("gyro needs fs > 0 and duration > 0");
  const auto n = static_cast<Eigen::Index>(std::llround(duration * fs));
  SignalMatrix x = SignalMatrix::Zero(1, n);
  const double w = 2.0 * std::numbers::pi * cfg.gait_cadence;
  for (const auto& [a, b] : walking_intervals(log)) {
    const auto i0 = static_cast<Eigen::Index>(std::ceil(a * fs - 1e-9));
    for (Eigen::Index i = std::max<Eigen::Index>(i0, 0); i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      if (t >= b) break;
      x(0, i) = cfg.gyro_amplitude * std::sin(w * (t - a));
    }
  }
  return Recording(std::move(x), fs, {"GYRO"});
}

std::vector<std::pair<double, double>> detect_walking(const Recording& trace, const PlantConfig& cfg,
                                                      double threshold_fraction) {
  cfg.validate();
  if (trace.n_channels() != 1) throw GeometryError("gyro trace must have exactly one channel");
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw ConfigError("threshold_fraction must lie in (0, 1)");
  const double fs = trace.fs();
  const double threshold = threshold_fraction * cfg.gyro_amplitude;
  const auto max_gap = static_cast<std::size_t>(0.5 / cfg.gait_cadence * fs);
  // Time between a zero crossing and the sinusoid reaching the threshold.
  const double slack = std::asin(threshold_fraction) / (2.0 * std::numbers::pi * cfg.gait_cadence);

  const auto x = trace.samples().row(0);
  std::vector<std::pair<std::size_t, std::size_t>> runs; // [first, last] active samples
  for (std::size_t i = 0; i < trace.n_samples(); ++i) {
    if (!(std::abs(x(static_cast<Eigen::Index>(i))) > threshold)) continue;
    if (!runs.empty() && i - runs.back().second <= max_gap)
      runs.back().second = i;
    else
      runs.emplace_back(i, i);
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [a, b] : runs)
    out.emplace_back(std::max(0.0, static_cast<double>(a) / fs - slack),
                     std::min(trace.duration(), static_cast<double>(b + 1) / fs + slack));
  return out;
}

std::vector<std::uint8_t> intervals_timeline(std::span<const std::pair<double, double>> intervals, double step,
                                             std::size_t n) {
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    for (const auto& [a, b] : intervals)
      if (a <= t && t < b) out[k] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate_log(const PlantLog& log) {
  if (log.empty() || log.front().phase != Phase::Stopped) throw FormatError("plant log must start Stopped");
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (!(log[i].t >= log[i - 1].t)) throw FormatError("plant log times decrease at row " + std::to_string(i));
    const auto expected = static_cast<Phase>((static_cast<int>(log[i - 1].phase) + 1) % 4);
    if (log[i].phase != expected)
      throw FormatError("illegal phase transition " + std::string(to_string(log[i - 1].phase)) + " -> " +
                        std::string(to_string(log[i].phase)));
  }
}

void write_plant_log(std::ostream& out, const PlantLog& log) {
  validate_log(log);
  out << "# gaitbci plant log\n# version 1\n# columns: t phase\n";
  for (const auto& e : log) out << io::format_double(e.t) << ' ' << to_string(e.phase) << '\n';
}

void write_plant_log(const std::filesystem::path& path, const PlantLog& log) {
  std::ostringstream s;
  write_plant_log(s, log);
  io::write_file_atomic(path, s.str());
}

PlantLog read_plant_log(std::istream& in) {
  PlantLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    PhaseEvent e;
    std::string phase;
    if (!(row >> e.t >> phase)) throw FormatError("malformed plant log row at line " + std::to_string(line_no));
    e.phase = parse_phase(phase);
    log.push_back(e);
  }
  validate_log(log);
  return log;
}

PlantLog read_plant_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_plant_log(in);
}

} // namespace gaitbci
