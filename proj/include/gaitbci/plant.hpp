#pragma once

#include "gaitbci/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gaitbci {

// Behavioral model of the gait orthosis: a command path with a fixed delay and
// locked-in startup and power-down sequences.
struct PlantConfig {
  double startup_latency = 5.0;  // s
  double shutdown_latency = 5.0; // s
  double gait_cadence = 0.9;     // steps/s
  double command_latency = 0.25; // s, BCI computer -> device
  double gyro_amplitude = 60.0;  // deg/s

  void validate() const;
};

enum class Phase : std::uint8_t { Stopped, StartingUp, Walking, ShuttingDown };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view text);

struct PhaseEvent {
  double t = 0.0;
  Phase phase = Phase::Stopped;
};

// Phase changes in time order; the first entry is (0, Stopped).
using PlantLog = std::vector<PhaseEvent>;

class Plant {
public:
  explicit Plant(const PlantConfig& cfg = {});

  // Returns whether the command was accepted. Walk is accepted only while
  // Stopped, Idle only while Walking, and neither while another accepted
  // command is still in flight; everything else is dropped, never queued.
  bool command(State cmd, double t);
  // Runs the plant forward to time t, completing any due phase changes.
  Phase advance_to(double t);
  Phase advance(double dt);

  Phase phase() const { return phase_; }
  double now() const { return now_; }
  const PlantLog& log() const { return log_; }

private:
  void enter(Phase p, double t);

  PlantConfig cfg_;
  Phase phase_ = Phase::Stopped;
  double now_ = 0.0;
  std::optional<std::pair<double, Phase>> pending_; // in-flight command effect
  PlantLog log_;
};

// Phase at time t according to a log.
Phase phase_at(const PlantLog& log, double t);

// 1 at t_k = k * step (k < n) exactly when the plant is Walking.
std::vector<std::uint8_t> walking_timeline(const PlantLog& log, double step, std::size_t n);

// Shank angular velocity: a sinusoid at the gait cadence while Walking, phase
// zero at each Walking onset, and zero otherwise. One channel labelled GYRO.
Recording gyro(const PlantLog& log, const PlantConfig& cfg, double fs, double duration);

// Walking intervals recovered from a gyro trace: samples above a fraction of
// the amplitude, with gaps shorter than half a gait period closed and each
// run widened by the time the sinusoid spends below the threshold.
std::vector<std::pair<double, double>> detect_walking(const Recording& gyro_trace, const PlantConfig& cfg,
                                                      double threshold_fraction = 0.2);
std::vector<std::uint8_t> intervals_timeline(std::span<const std::pair<double, double>> intervals, double step,
                                             std::size_t n);

void write_plant_log(std::ostream& out, const PlantLog& log);
void write_plant_log(const std::filesystem::path& path, const PlantLog& log);
PlantLog read_plant_log(std::istream& in);
PlantLog read_plant_log(const std::filesystem::path& path);
void validate_log(const PlantLog& log);

} // namespace gaitbci
