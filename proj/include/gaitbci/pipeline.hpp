#pragma once

#include "gaitbci/eval.hpp"
#include "gaitbci/training.hpp"

#include <cstdint>
#include <optional>

namespace gaitbci {

// Session protocol defaults: alternating cue epochs, Idle first.
namespace protocol {
CueSchedule training_cues();    // 20 x 30 s (10 min)
CueSchedule calibration_cues(); // 10 x 30 s
CueSchedule session_cues();     // 5 x 60 s
// Calibration ignores P-bar for this long after each cue change: the 2 s
// average plus one window must refill with posteriors from the new epoch.
inline constexpr double kCalibrationSettle = 2.75;
} // namespace protocol

// Stream ids for the per-recording seeds derived from a master seed.
enum class SeedStream : std::uint64_t { Training = 1, Calibration = 2, Session = 3, MonteCarlo = 4 };

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream);

// Replays a calibration recording through the model (thresholds irrelevant:
// only P-bar is used) and suggests thresholds from the labelled P-bar log.
CalibrationResult calibrate_model(const Recording& rec, const CueSchedule& cues, const PredictionModel& model,
                                  const DecoderConfig& decoder, double settle = protocol::kCalibrationSettle,
                                  Exec exec = Exec::Parallel);

// Monte Carlo control of a finished session against its own fitted null.
struct SessionSignificance {
  ARNullModel null_model;
  MonteCarloResult result;
};

SessionSignificance session_significance(const CueSchedule& cues, const SessionResult& session,
                                         const DecoderConfig& decoder, const PlantConfig& plant,
                                         const MonteCarloConfig& mc, Exec exec = Exec::Parallel);

struct PipelineConfig {
  std::uint64_t seed = 1;
  SynthConfig synth; // its seed is replaced by per-recording derived seeds
  TrainConfig train;
  DecoderConfig decoder; // thresholds are replaced by calibration
  PlantConfig plant;
  std::size_t mc_trials = 10000; // 0 skips the Monte Carlo control
  double max_lag = 30.0;
};

struct PipelineResult {
  PredictionModel model;
  CalibrationResult calibration;
  DecoderConfig decoder;
  SessionResult session;
  SessionReport report;
  std::optional<SessionSignificance> significance;
};

// Synthetic training, calibration and session recordings, then
// train -> calibrate -> run -> evaluate (-> Monte Carlo).
PipelineResult run_synthetic_pipeline(const PipelineConfig& cfg, Exec exec = Exec::Parallel);

} // namespace gaitbci
