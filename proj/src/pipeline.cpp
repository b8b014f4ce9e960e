#include "gaitbci/pipeline.hpp"

#include <algorithm>

namespace gaitbci {

namespace protocol {
CueSchedule training_cues() { return CueSchedule::alternating(20, 30.0); }
CueSchedule calibration_cues() { return CueSchedule::alternating(10, 30.0); }
CueSchedule session_cues() { return CueSchedule::alternating(5, 60.0); }
} // namespace protocol

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), 0x5EED);
}

CalibrationResult calibrate_model(const Recording& rec, const CueSchedule& cues, const PredictionModel& model,
                                  const DecoderConfig& decoder, double settle, Exec exec) {
  const auto trace = run_stream(rec, model, decoder, exec);
  const auto log = calibration_log(trace, cues, settle);
  return calibrate(log.pbar, log.phase);
}

SessionSignificance session_significance(const CueSchedule& cues, const SessionResult& session,
                                         const DecoderConfig& decoder, const PlantConfig& plant,
                                         const MonteCarloConfig& mc, Exec exec) {
  SessionSignificance s;
  s.null_model = fit_null(session.trace.posterior);
  const auto cue = cues.timeline(session.trace.step, session.walking.size());
  const double observed = cross_correlate(cue, session.walking, session.trace.step, mc.max_lag).max;
  s.result = monte_carlo(observed, cue, session.trace.times, session.duration, s.null_model, decoder, plant, mc, exec);
  return s;
}

PipelineResult run_synthetic_pipeline(const PipelineConfig& cfg, Exec exec) {
  PipelineResult r;
  SynthConfig synth = cfg.synth;

  const auto train_cues = protocol::training_cues();
  synth.seed = stream_seed(cfg.seed, SeedStream::Training);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  r.model = gaitbci::train(generate_synthetic(synth, train_cues), train_cues, train, nullptr, exec);

  const auto cal_cues = protocol::calibration_cues();
  synth.seed = stream_seed(cfg.seed, SeedStream::Calibration);
  r.calibration = calibrate_model(generate_synthetic(synth, cal_cues), cal_cues, r.model, cfg.decoder,
                                  protocol::kCalibrationSettle, exec);
  r.decoder = cfg.decoder;
  r.decoder.t_idle = r.calibration.t_idle;
  r.decoder.t_walk = r.calibration.t_walk;

  const auto session_cues = protocol::session_cues();
  synth.seed = stream_seed(cfg.seed, SeedStream::Session);
  r.session = run_session(generate_synthetic(synth, session_cues), r.model, r.decoder, cfg.plant, exec);
  r.report = evaluate_session(session_cues, r.session, cfg.max_lag);

  if (cfg.mc_trials > 0) {
    MonteCarloConfig mc;
    mc.trials = cfg.mc_trials;
    mc.seed = stream_seed(cfg.seed, SeedStream::MonteCarlo);
    mc.max_lag = cfg.max_lag;
    r.significance = session_significance(session_cues, r.session, r.decoder, cfg.plant, mc, exec);
    r.report.p_value = r.significance->result.p_value;
    r.report.n_mc = mc.trials;
    r.report.null_max = *std::max_element(r.significance->result.null_max.begin(),
                                          r.significance->result.null_max.end());
  }
  return r;
}

} // namespace gaitbci
