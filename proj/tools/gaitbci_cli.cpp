// gaitbci: synthesize, train, calibrate, run, evaluate and Monte Carlo stages
// of the gait BCI pipeline. Every stage writes fixed file names into --out.

#include "manifest.hpp"

#include "gaitbci/config.hpp"
#include "gaitbci/io.hpp"
#include "gaitbci/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gaitbci;
using cli::RunManifest;

namespace {

// Exit codes name the stage that failed.
enum ExitCode : int {
  kManifestFailed = 2,
  kSynthFailed = 10,
  kTrainFailed = 11,
  kCalibrateFailed = 12,
  kRunFailed = 13,
  kEvaluateFailed = 14,
  kMonteCarloFailed = 15,
};

struct StageFailure {
  std::string stage;
  int code;
  std::string message;
};

struct Common {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Context {
  RunManifest manifest;
  std::uint64_t seed = 1;
  fs::path out = ".";

  fs::path file(const std::string& name) const { return out / name; }
};

Context make_context(const Common& c) {
  Context ctx;
  if (!c.manifest.empty()) {
    try {
      ctx.manifest = cli::load_manifest(c.manifest);
    } catch (const Error& e) {
      throw StageFailure{"manifest", kManifestFailed, e.what()};
    }
  }
  ctx.seed = c.seed ? *c.seed : ctx.manifest.seed.value_or(1);
  if (!c.out.empty()) ctx.out = c.out;
  else if (ctx.manifest.out) ctx.out = *ctx.manifest.out;
  return ctx;
}

// Flag value, then manifest value, then the stage's default file in --out.
fs::path pick(const std::string& flag, const std::optional<fs::path>& from_manifest, const fs::path& fallback) {
  if (!flag.empty()) return flag;
  if (from_manifest) return *from_manifest;
  return fallback;
}

template <class T, class Parse>
T load_config(const std::string& flag, const std::optional<fs::path>& from_manifest, Parse parse) {
  if (!flag.empty()) return parse(io::read_file(flag));
  if (from_manifest) return parse(io::read_file(*from_manifest));
  return T{};
}

void ensure_out(const Context& ctx) { fs::create_directories(ctx.out); }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

enum class Role { Training, Calibration, Session };

const char* role_name(Role r) {
  switch (r) {
  case Role::Training: return "training";
  case Role::Calibration: return "calibration";
  case Role::Session: return "session";
  }
  return "?";
}

const cli::RecordingRef& role_ref(const Context& ctx, Role r) {
  switch (r) {
  case Role::Training: return ctx.manifest.training;
  case Role::Calibration: return ctx.manifest.calibration;
  case Role::Session: return ctx.manifest.session;
  }
  return ctx.manifest.training;
}

struct SynthArgs {
  Role role = Role::Training;
  std::string config, cues;
  bool text = false;
};

void synth_stage(const Context& ctx, const SynthArgs& a) {
  SynthConfig cfg = load_config<SynthConfig>(a.config, ctx.manifest.synth_config, parse_synth_config);
  CueSchedule cues;
  if (!a.cues.empty()) cues = io::read_cues(a.cues);
  else if (role_ref(ctx, a.role).cues) cues = io::read_cues(*role_ref(ctx, a.role).cues);
  else if (a.role == Role::Training) cues = protocol::training_cues();
  else if (a.role == Role::Calibration) cues = protocol::calibration_cues();
  else cues = protocol::session_cues();
  const SeedStream stream = a.role == Role::Training      ? SeedStream::Training
                            : a.role == Role::Calibration ? SeedStream::Calibration
                                                          : SeedStream::Session;
  cfg.seed = stream_seed(ctx.seed, stream);
  const Recording rec = generate_synthetic(cfg, cues);
  ensure_out(ctx);
  const std::string name = role_name(a.role);
  io::write_recording(ctx.file(name + ".rec"), rec, a.text ? io::RecordingFormat::Text : io::RecordingFormat::Binary);
  io::write_cues(ctx.file(name + "_cues.txt"), cues);
  std::cout << "synth: " << name << ".rec  " << rec.n_channels() << " channels, " << fixed(rec.duration(), 2)
            << " s at " << fixed(rec.fs(), 1) << " Hz\n";
}

struct TrainArgs {
  std::string recording, cues, config;
};

void train_stage(const Context& ctx, const TrainArgs& a) {
  const auto rec = io::read_recording(pick(a.recording, ctx.manifest.training.recording, ctx.file("training.rec")));
  const auto cues = io::read_cues(pick(a.cues, ctx.manifest.training.cues, ctx.file("training_cues.txt")));
  TrainConfig cfg = load_config<TrainConfig>(a.config, ctx.manifest.train_config, parse_train_config);
  cfg.seed = ctx.seed;
  TrainReport report;
  const auto model = train(rec, cues, cfg, &report);
  ensure_out(ctx);
  io::write_file_atomic(ctx.file("model.json"), serialize_model(model));
  std::cout << "train: " << report.n_trials << " trials, " << model.retained_channels.size() << "/"
            << rec.n_channels() << " channels retained, band [" << fixed(model.band.first, 1) << ", "
            << fixed(model.band.second, 1) << ") Hz, " << model.cv.fold_accuracy.size() << "-fold CV accuracy "
            << fixed(model.cv.mean, 4) << " +/- " << fixed(model.cv.sd, 4) << "\n";
}

PredictionModel load_model(const Context& ctx, const std::string& flag) {
  return deserialize_model(io::read_file(pick(flag, ctx.manifest.model, ctx.file("model.json"))));
}

struct CalibrateArgs {
  std::string recording, cues, model, decoder;
  double settle = protocol::kCalibrationSettle;
};

void write_calibration_histogram(const fs::path& path, const CalibrationResult& r) {
  std::ostringstream s;
  s << "# P-bar histogram, bin width " << io::format_double(CalibrationResult::kBinWidth)
    << "\n# columns: bin_lo idle walk\n";
  for (std::size_t b = 0; b < r.histogram_idle.size(); ++b)
    s << io::format_double(static_cast<double>(b) * CalibrationResult::kBinWidth) << ' ' << r.histogram_idle[b]
      << ' ' << r.histogram_walk[b] << '\n';
  io::write_file_atomic(path, s.str());
}

void calibrate_stage(const Context& ctx, const CalibrateArgs& a) {
  const auto rec =
      io::read_recording(pick(a.recording, ctx.manifest.calibration.recording, ctx.file("calibration.rec")));
  const auto cues = io::read_cues(pick(a.cues, ctx.manifest.calibration.cues, ctx.file("calibration_cues.txt")));
  const auto model = load_model(ctx, a.model);
  DecoderConfig dec = load_config<DecoderConfig>(a.decoder, ctx.manifest.decoder_config, parse_decoder_config);
  const auto r = calibrate_model(rec, cues, model, dec, a.settle);
  dec.t_idle = r.t_idle;
  dec.t_walk = r.t_walk;
  ensure_out(ctx);
  io::write_file_atomic(ctx.file("decoder.json"), decoder_config_json(dec));
  write_calibration_histogram(ctx.file("calibration_histogram.txt"), r);
  std::cout << "calibrate: idle P95 " << io::format_double(r.p95_idle) << ", walk P5 "
            << io::format_double(r.p5_walk) << " -> T_I " << io::format_double(r.t_idle) << ", T_W "
            << io::format_double(r.t_walk) << "\n";
}

struct RunArgs {
  std::string recording, model, decoder, plant;
  double gyro_fs = 100.0;
};

void run_stage(const Context& ctx, const RunArgs& a) {
  const auto rec = io::read_recording(pick(a.recording, ctx.manifest.session.recording, ctx.file("session.rec")));
  const auto model = load_model(ctx, a.model);
  const auto dec = parse_decoder_config(io::read_file(pick(a.decoder, ctx.manifest.decoder_config, ctx.file("decoder.json"))));
  const auto plant = load_config<PlantConfig>(a.plant, ctx.manifest.plant_config, parse_plant_config);
  const auto session = run_session(rec, model, dec, plant);
  ensure_out(ctx);
  write_trace(ctx.file("trace.txt"), session.trace);
  write_plant_log(ctx.file("plant_log.txt"), session.plant_log);
  io::write_recording(ctx.file("gyro.rec"), gyro(session.plant_log, plant, a.gyro_fs, session.duration));
  std::size_t transitions = 0;
  for (std::size_t i = 1; i < session.trace.size(); ++i) transitions += session.trace.states[i] != session.trace.states[i - 1];
  std::cout << "run: " << session.trace.size() << " decisions, " << transitions << " decoder transitions, "
            << session.plant_log.size() - 1 << " plant phase changes\n";
}

// Observed session statistics shared by evaluate and montecarlo.
struct Replayed {
  CueSchedule cues;
  SessionResult session;
};

Replayed replay(const fs::path& cue_path, const PlantLog& log, const std::optional<StateTrace>& trace, double step) {
  Replayed r;
  r.cues = io::read_cues(cue_path);
  r.session.duration = r.cues.total();
  r.session.plant_log = log;
  r.session.trace.step = trace ? trace->step : step;
  const std::size_t n = timeline_length(r.session.duration, r.session.trace.step);
  r.session.walking = walking_timeline(log, r.session.trace.step, n);
  if (trace) {
    r.session.trace = *trace;
    r.session.decoded = trace->timeline(n);
  }
  return r;
}

std::string mc_json(const MonteCarloConfig& mc, const SessionSignificance& s) {
  nlohmann::json j;
  j["schema"] = "gaitbci.montecarlo";
  j["version"] = 1;
  j["trials"] = mc.trials;
  j["seed"] = mc.seed;
  j["max_lag"] = mc.max_lag;
  j["observed_max"] = s.result.observed;
  j["p_value"] = s.result.p_value;
  j["null_max"] = *std::max_element(s.result.null_max.begin(), s.result.null_max.end());
  j["null_model"] = {{"alpha", s.null_model.alpha}, {"beta", s.null_model.beta}, {"mu", s.null_model.mu},
                     {"rho", s.null_model.rho},     {"sigma2", s.null_model.sigma2}};
  return j.dump(1) + "\n";
}

struct EvaluateArgs {
  std::string cues, plant_log, trace, montecarlo;
  double step = 0.25;
  double max_lag = 30.0;
};

void evaluate_stage(const Context& ctx, const EvaluateArgs& a) {
  const auto log = read_plant_log(pick(a.plant_log, std::nullopt, ctx.file("plant_log.txt")));
  std::optional<StateTrace> trace;
  const fs::path trace_path = pick(a.trace, std::nullopt, ctx.file("trace.txt"));
  if (!a.trace.empty() || fs::exists(trace_path)) trace = read_trace(trace_path);
  const auto r = replay(pick(a.cues, ctx.manifest.session.cues, ctx.file("session_cues.txt")), log, trace, a.step);
  SessionReport report = evaluate_session(r.cues, r.session, a.max_lag);
  if (!a.montecarlo.empty()) {
    const auto j = nlohmann::json::parse(io::read_file(a.montecarlo));
    if (j.value("schema", "") != "gaitbci.montecarlo") throw FormatError(a.montecarlo + " is not a Monte Carlo result");
    report.p_value = j.at("p_value").get<double>();
    report.n_mc = j.at("trials").get<std::size_t>();
    report.null_max = j.at("null_max").get<double>();
  }
  const auto curve = cross_correlate(r.cues.timeline(r.session.trace.step, r.session.walking.size()),
                                     r.session.walking, r.session.trace.step, a.max_lag);
  ensure_out(ctx);
  io::write_file_atomic(ctx.file("report.json"), report_json(report));
  std::ostringstream s;
  s << "# cue vs plant walking cross-correlation\n# columns: lag_s r\n";
  for (std::size_t l = 0; l < curve.curve.size(); ++l)
    s << io::format_double(static_cast<double>(l) * r.session.trace.step) << ' ' << io::format_double(curve.curve[l])
      << '\n';
  io::write_file_atomic(ctx.file("xcorr_curve.txt"), s.str());

  std::cout << "evaluate: xcorr (lag) " << fixed(report.xcorr_max) << " (" << fixed(report.lag_at_max, 2)
            << ")  OM " << report.omissions << "  FA " << report.false_alarms;
  if (!report.fa_durations.empty()) {
    std::cout << " (";
    for (std::size_t i = 0; i < report.fa_durations.size(); ++i)
      std::cout << (i ? ", " : "") << fixed(report.fa_durations[i], 2);
    std::cout << ")";
  }
  if (report.p_value) std::cout << "  p " << io::format_double(*report.p_value) << " (n = " << report.n_mc << ")";
  std::cout << "\n";
}

struct MonteCarloArgs {
  std::string cues, trace, decoder, plant;
  std::optional<std::size_t> trials;
  double max_lag = 30.0;
};

void montecarlo_stage(const Context& ctx, const MonteCarloArgs& a) {
  const auto trace = read_trace(pick(a.trace, std::nullopt, ctx.file("trace.txt")));
  const auto dec = parse_decoder_config(io::read_file(pick(a.decoder, ctx.manifest.decoder_config, ctx.file("decoder.json"))));
  const auto plant = load_config<PlantConfig>(a.plant, ctx.manifest.plant_config, parse_plant_config);
  const auto cues = io::read_cues(pick(a.cues, ctx.manifest.session.cues, ctx.file("session_cues.txt")));
  // Re-drive the plant from the trace so the observed statistic uses the
  // same plant configuration as the null trials.
  const auto session = simulate_plant(trace, plant, cues.total());
  MonteCarloConfig mc;
  mc.trials = a.trials ? *a.trials : ctx.manifest.mc_trials.value_or(10000);
  mc.seed = stream_seed(ctx.seed, SeedStream::MonteCarlo);
  mc.max_lag = a.max_lag;
  const auto sig = session_significance(cues, session, dec, plant, mc);
  ensure_out(ctx);
  io::write_file_atomic(ctx.file("montecarlo.json"), mc_json(mc, sig));
  // Null maxima histogram over [-1, 1] in 0.02 bins.
  std::vector<std::size_t> hist(100, 0);
  for (double v : sig.result.null_max)
    ++hist[std::min<std::size_t>(99, static_cast<std::size_t>(std::max(0.0, (v + 1.0) / 0.02)))];
  std::ostringstream s;
  s << "# null maximum cross-correlation histogram\n# columns: bin_lo count\n";
  for (std::size_t b = 0; b < hist.size(); ++b)
    s << io::format_double(-1.0 + 0.02 * static_cast<double>(b)) << ' ' << hist[b] << '\n';
  io::write_file_atomic(ctx.file("null_histogram.txt"), s.str());
  std::cout << "montecarlo: " << mc.trials << " null trials, observed max " << fixed(sig.result.observed)
            << ", null max " << fixed(*std::max_element(sig.result.null_max.begin(), sig.result.null_max.end()))
            << ", p = " << io::format_double(sig.result.p_value) << "\n";
}

// ---------------------------------------------------------------------------

void run_guarded(const std::string& stage, int code, const std::function<void()>& body) {
  try {
    body();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure{stage, code, e.what()};
  }
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--manifest", c.manifest, "Run manifest (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed (overrides the manifest)");
  cmd->add_option("--out", c.out, "Output directory (default: manifest 'out' or .)");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaitbci: EEG-driven gait orthosis BCI pipeline on synthetic data"};
  app.require_subcommand(1);

  Common common;
  std::function<void()> action;

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic EEG recording and its cue file");
  add_common(synth, common);
  synth->add_option("--role", synth_args.role, "training | calibration | session (default training)")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Role>{{"training", Role::Training}, {"calibration", Role::Calibration},
                                      {"session", Role::Session}}));
  synth->add_option("--config", synth_args.config, "Synthetic generator config (JSON)");
  synth->add_option("--cues", synth_args.cues, "Cue file (default: protocol schedule for the role)");
  synth->add_flag("--text", synth_args.text, "Write the text recording format");
  synth->callback([&] {
    action = [&] { run_guarded("synth", kSynthFailed, [&] { synth_stage(make_context(common), synth_args); }); };
  });

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Fit the prediction model; writes model.json");
  add_common(train_cmd, common);
  train_cmd->add_option("--recording", train_args.recording, "Training recording");
  train_cmd->add_option("--cues", train_args.cues, "Training cue file");
  train_cmd->add_option("--config", train_args.config, "Training config (JSON)");
  train_cmd->callback([&] {
    action = [&] { run_guarded("train", kTrainFailed, [&] { train_stage(make_context(common), train_args); }); };
  });

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "Suggest thresholds; writes decoder.json and calibration_histogram.txt");
  add_common(cal, common);
  cal->add_option("--recording", cal_args.recording, "Calibration recording");
  cal->add_option("--cues", cal_args.cues, "Calibration cue file");
  cal->add_option("--model", cal_args.model, "Model file");
  cal->add_option("--decoder", cal_args.decoder, "Base decoder config (JSON); thresholds are replaced");
  cal->add_option("--settle", cal_args.settle, "Seconds skipped after each cue change");
  cal->callback([&] {
    action = [&] { run_guarded("calibrate", kCalibrateFailed, [&] { calibrate_stage(make_context(common), cal_args); }); };
  });

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Closed-loop session; writes trace.txt, plant_log.txt and gyro.rec");
  add_common(run, common);
  run->add_option("--recording", run_args.recording, "Session recording");
  run->add_option("--model", run_args.model, "Model file");
  run->add_option("--decoder", run_args.decoder, "Decoder config (JSON), usually from calibrate");
  run->add_option("--plant", run_args.plant, "Plant config (JSON)");
  run->add_option("--gyro-fs", run_args.gyro_fs, "Gyro trace sampling rate (Hz)");
  run->callback([&] {
    action = [&] { run_guarded("run", kRunFailed, [&] { run_stage(make_context(common), run_args); }); };
  });

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score a session; writes report.json and xcorr_curve.txt");
  add_common(evaluate, common);
  evaluate->add_option("--cues", eval_args.cues, "Session cue file");
  evaluate->add_option("--plant-log", eval_args.plant_log, "Plant log from run");
  evaluate->add_option("--trace", eval_args.trace, "State trace (adds decoder-state diagnostics)");
  evaluate->add_option("--montecarlo", eval_args.montecarlo, "montecarlo.json to fold into the report");
  evaluate->add_option("--step", eval_args.step, "Timeline step when no trace is given (s)");
  evaluate->add_option("--max-lag", eval_args.max_lag, "Largest lag searched (s)");
  evaluate->callback([&] {
    action = [&] { run_guarded("evaluate", kEvaluateFailed, [&] { evaluate_stage(make_context(common), eval_args); }); };
  });

  MonteCarloArgs mc_args;
  auto* mc = app.add_subcommand("montecarlo", "AR null control; writes montecarlo.json and null_histogram.txt");
  add_common(mc, common);
  mc->add_option("--cues", mc_args.cues, "Session cue file");
  mc->add_option("--trace", mc_args.trace, "State trace from run");
  mc->add_option("--decoder", mc_args.decoder, "Decoder config used for the session");
  mc->add_option("--plant", mc_args.plant, "Plant config used for the session");
  mc->add_option("-n,--trials", mc_args.trials, "Number of null trials (default 10000)");
  mc->add_option("--max-lag", mc_args.max_lag, "Largest lag searched (s)");
  mc->callback([&] {
    action = [&] { run_guarded("montecarlo", kMonteCarloFailed, [&] { montecarlo_stage(make_context(common), mc_args); }); };
  });

  std::optional<std::size_t> pipeline_trials;
  auto* pipeline = app.add_subcommand("pipeline", "synth x3 -> train -> calibrate -> run -> montecarlo -> evaluate");
  add_common(pipeline, common);
  pipeline->add_option("-n,--trials", pipeline_trials, "Monte Carlo trials (default: manifest or 10000)");
  pipeline->callback([&] {
    action = [&] {
      const Context ctx = make_context(common);
      for (Role role : {Role::Training, Role::Calibration, Role::Session}) {
        if (role_ref(ctx, role).recording) continue;
        SynthArgs s;
        s.role = role;
        run_guarded("synth", kSynthFailed, [&] { synth_stage(ctx, s); });
      }
      if (!ctx.manifest.model) run_guarded("train", kTrainFailed, [&] { train_stage(ctx, {}); });
      run_guarded("calibrate", kCalibrateFailed, [&] { calibrate_stage(ctx, {}); });
      RunArgs r;
      r.decoder = ctx.file("decoder.json").string();
      run_guarded("run", kRunFailed, [&] { run_stage(ctx, r); });
      MonteCarloArgs m;
      m.trials = pipeline_trials;
      m.decoder = r.decoder;
      run_guarded("montecarlo", kMonteCarloFailed, [&] { montecarlo_stage(ctx, m); });
      EvaluateArgs e;
      e.montecarlo = ctx.file("montecarlo.json").string();
      run_guarded("evaluate", kEvaluateFailed, [&] { evaluate_stage(ctx, e); });
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    action();
  } catch (const StageFailure& f) {
    std::cerr << "gaitbci: " << f.stage << " failed: " << f.message << "\n";
    return f.code;
  }
  return 0;
}
