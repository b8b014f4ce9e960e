#include "manifest.hpp"

#include "gaitbci/config.hpp"
#include "gaitbci/io.hpp"
#include "gaitbci/training.hpp"

#include <json.hpp>

namespace gaitbci::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError("manifest field '" + field + "' must be a path string");
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

// Runs `check` on an existing file, prefixing any failure with the field.
template <class F>
void check_file(const fs::path& p, const std::string& field, F check) {
  if (!fs::exists(p)) throw ConfigError("manifest field '" + field + "': " + p.string() + " does not exist");
  try {
    check(p);
  } catch (const Error& e) {
    throw ConfigError("manifest field '" + field + "': " + e.what());
  }
}

RecordingRef recording_ref(const fs::path& base, const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError("manifest field '" + field + "' must be an object");
  RecordingRef r;
  for (const auto& [key, v] : j.items()) {
    const std::string name = field + "." + key;
    if (key == "recording") {
      r.recording = resolve(base, v, name);
      check_file(*r.recording, name, [](const fs::path& p) { io::read_recording(p); });
    } else if (key == "cues") {
      r.cues = resolve(base, v, name);
      check_file(*r.cues, name, [](const fs::path& p) { io::read_cues(p); });
    } else {
      throw ConfigError("unknown manifest field '" + name + "'");
    }
  }
  return r;
}

} // namespace

RunManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  RunManifest m;
  auto text_check = [](auto parse) { return [parse](const fs::path& p) { parse(io::read_file(p)); }; };
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "seed") m.seed = v.get<std::uint64_t>();
      else if (key == "out") m.out = resolve(base, v, key);
      else if (key == "mc_trials") m.mc_trials = v.get<std::size_t>();
      else if (key == "synth_config") {
        m.synth_config = resolve(base, v, key);
        check_file(*m.synth_config, key, text_check(parse_synth_config));
      } else if (key == "train_config") {
        m.train_config = resolve(base, v, key);
        check_file(*m.train_config, key, text_check(parse_train_config));
      } else if (key == "decoder_config") {
        m.decoder_config = resolve(base, v, key);
        check_file(*m.decoder_config, key, text_check(parse_decoder_config));
      } else if (key == "plant_config") {
        m.plant_config = resolve(base, v, key);
        check_file(*m.plant_config, key, text_check(parse_plant_config));
      } else if (key == "model") {
        m.model = resolve(base, v, key);
        check_file(*m.model, key, text_check(deserialize_model));
      } else if (key == "training") m.training = recording_ref(base, v, key);
      else if (key == "calibration") m.calibration = recording_ref(base, v, key);
      else if (key == "session") m.session = recording_ref(base, v, key);
      else throw ConfigError("unknown manifest field '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("manifest field '" + key + "': " + e.what());
    }
  }
  return m;
}

} // namespace gaitbci::cli
