#pragma once

#include "gaitbci/decoder.hpp"
#include "gaitbci/plant.hpp"

#include <cstdint>
#include <vector>

namespace gaitbci {

// Number of timeline samples t_k = k * step covering [0, duration).
std::size_t timeline_length(double duration, double step);

// Feeds every decision to the plant at its decision time. The command is the
// decoder state, re-sent each step; the plant itself drops redundant and
// locked-in commands. The plant is then run to `duration`.
PlantLog drive_plant(const StateTrace& trace, const PlantConfig& cfg, double duration);

struct SessionResult {
  StateTrace trace;
  PlantLog plant_log;
  double duration = 0.0;
  std::vector<std::uint8_t> walking; // plant Walking at t_k
  std::vector<std::uint8_t> decoded; // decoder Walk at t_k
};

SessionResult simulate_plant(StateTrace trace, const PlantConfig& plant, double duration);

// Closed loop over a recording: decoder -> plant, sampled on the decision grid.
SessionResult run_session(const Recording& rec, const PredictionModel& model, const DecoderConfig& decoder,
                          const PlantConfig& plant, Exec exec = Exec::Parallel);

} // namespace gaitbci
