#include "gaitbci/session.hpp"

#include <cmath>

namespace gaitbci {

std::size_t timeline_length(double duration, double step) {
  if (!(step > 0.0) || !(duration >= 0.0)) throw ConfigError("timeline needs step > 0 and duration >= 0");
  return static_cast<std::size_t>(std::ceil(duration / step - 1e-9));
}

PlantLog drive_plant(const StateTrace& trace, const PlantConfig& cfg, double duration) {
  Plant plant(cfg);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.times[i] > duration) break;
    plant.command(trace.states[i], trace.times[i]);
  }
  plant.advance_to(std::max(duration, plant.now()));
  return plant.log();
}

SessionResult simulate_plant(StateTrace trace, const PlantConfig& plant, double duration) {
  SessionResult r;
  r.duration = duration;
  r.plant_log = drive_plant(trace, plant, duration);
  const std::size_t n = timeline_length(duration, trace.step);
  r.walking = walking_timeline(r.plant_log, trace.step, n);
  r.decoded = trace.timeline(n);
  r.trace = std::move(trace);
  return r;
}

SessionResult run_session(const Recording& rec, const PredictionModel& model, const DecoderConfig& decoder,
                          const PlantConfig& plant, Exec exec) {
  plant.validate();
  return simulate_plant(run_stream(rec, model, decoder, exec), plant, rec.duration());
}

} // namespace gaitbci
