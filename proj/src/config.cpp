#include "gaitbci/config.hpp"

#include <json.hpp>

namespace gaitbci {

using nlohmann::json;

namespace {

json parse_object(const std::string& text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  return j;
}

// Runs `assign` for every field, turning JSON type errors into ConfigErrors
// that name the field. `assign` returns false for unknown fields.
template <class F>
void for_fields(const json& j, F assign) {
  for (const auto& [key, v] : j.items()) {
    bool known = false;
    try {
      known = assign(key, v);
    } catch (const json::exception& e) {
      throw ConfigError("field '" + key + "': " + e.what());
    }
    if (!known) throw ConfigError("unknown field '" + key + "'");
  }
}

std::pair<double, double> pair_from(const std::string& key, const json& v) {
  const auto b = v.get<std::vector<double>>();
  if (b.size() != 2) throw ConfigError("field '" + key + "': expected [lo, hi]");
  return {b[0], b[1]};
}

} // namespace

std::string synth_config_json(const SynthConfig& c) {
  json j;
  j["n_channels"] = c.n_channels;
  j["fs"] = c.fs;
  j["active_channels"] = c.active_channels;
  j["erd_band"] = {c.erd_band.first, c.erd_band.second};
  j["erd_depth"] = c.erd_depth;
  j["noise_exponent"] = c.noise_exponent;
  j["amplitude_scale"] = c.amplitude_scale;
  j["oscillator_snr"] = c.oscillator_snr;
  j["low_cutoff"] = c.low_cutoff;
  j["seed"] = c.seed;
  return j.dump(1) + "\n";
}

SynthConfig parse_synth_config(const std::string& text) {
  SynthConfig c;
  for_fields(parse_object(text, "synth config"), [&](const std::string& key, const json& v) {
    if (key == "n_channels") c.n_channels = v.get<std::size_t>();
    else if (key == "fs") c.fs = v.get<double>();
    else if (key == "active_channels") c.active_channels = v.get<std::vector<std::size_t>>();
    else if (key == "erd_band") c.erd_band = pair_from(key, v);
    else if (key == "erd_depth") c.erd_depth = v.get<double>();
    else if (key == "noise_exponent") c.noise_exponent = v.get<double>();
    else if (key == "amplitude_scale") c.amplitude_scale = v.get<double>();
    else if (key == "oscillator_snr") c.oscillator_snr = v.get<double>();
    else if (key == "low_cutoff") c.low_cutoff = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

std::string decoder_config_json(const DecoderConfig& c) {
  json j;
  j["window_length"] = c.window.length;
  j["window_step"] = c.window.step;
  j["avg_horizon"] = c.avg_horizon;
  j["t_idle"] = c.t_idle;
  j["t_walk"] = c.t_walk;
  j["initial_state"] = to_string(c.initial_state);
  return j.dump(1) + "\n";
}

DecoderConfig parse_decoder_config(const std::string& text) {
  DecoderConfig c;
  for_fields(parse_object(text, "decoder config"), [&](const std::string& key, const json& v) {
    if (key == "window_length") c.window.length = v.get<double>();
    else if (key == "window_step") c.window.step = v.get<double>();
    else if (key == "avg_horizon") c.avg_horizon = v.get<double>();
    else if (key == "t_idle") c.t_idle = v.get<double>();
    else if (key == "t_walk") c.t_walk = v.get<double>();
    else if (key == "initial_state") {
      try {
        c.initial_state = parse_state(v.get<std::string>());
      } catch (const FormatError& e) {
        throw ConfigError("field 'initial_state': " + std::string(e.what()));
      }
    } else return false;
    return true;
  });
  c.validate();
  return c;
}

std::string plant_config_json(const PlantConfig& c) {
  json j;
  j["startup_latency"] = c.startup_latency;
  j["shutdown_latency"] = c.shutdown_latency;
  j["gait_cadence"] = c.gait_cadence;
  j["command_latency"] = c.command_latency;
  j["gyro_amplitude"] = c.gyro_amplitude;
  return j.dump(1) + "\n";
}

PlantConfig parse_plant_config(const std::string& text) {
  PlantConfig c;
  for_fields(parse_object(text, "plant config"), [&](const std::string& key, const json& v) {
    if (key == "startup_latency") c.startup_latency = v.get<double>();
    else if (key == "shutdown_latency") c.shutdown_latency = v.get<double>();
    else if (key == "gait_cadence") c.gait_cadence = v.get<double>();
    else if (key == "command_latency") c.command_latency = v.get<double>();
    else if (key == "gyro_amplitude") c.gyro_amplitude = v.get<double>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

} // namespace gaitbci
